"""
Duplicated rows in G
====================

At short code lengths two generated rows of G often coincide.  The two
positions then carry the same bit up to noise, which is easy to test.
"""

from prcbreak.attack_weakkey import distinguish_by_pairs, equality_rate, find_duplicate_rows, weak_key_prob_llm
from prcbreak.scheme import PrcParams, encode_batch, keygen_llm, uniform_codewords

params = PrcParams.llm(512, 3, omega=0.05)
print("predicted weak-key probability:", weak_key_prob_llm(params.n, params.r, params.t))

weak = [s for s in range(50) if find_duplicate_rows(keygen_llm(params, s).pk.G)]
print(f"{len(weak)} of 50 keys have duplicated rows")

kp = keygen_llm(params, weak[0])
pairs = find_duplicate_rows(kp.pk.G)
print("first pairs:", pairs.pairs[:5])

X, _, _ = encode_batch(kp.pk, params, 128, seed=1)
print("watermarked agreement:", distinguish_by_pairs(pairs, kp.pk.z, X, 0.6).ratio,
      "expected", equality_rate(params.omega))
print("uniform agreement:    ", distinguish_by_pairs(pairs, kp.pk.z, uniform_codewords(params.n, 128, 2), 0.6).ratio)
