"""
Keys, codewords and decoding
============================

Generate a key, encode a few codewords, and watch the syndrome weight
climb as channel noise grows.
"""

import numpy as np

from prcbreak.scheme import PrcParams, decode_threshold, encode_batch, keygen_llm, syndrome_weights, uniform_codewords

params = PrcParams.llm(4096, 3)
kp = keygen_llm(params, seed=1)
print(params)
print("decode threshold:", decode_threshold(params.r), "of", params.r, "checks")

# syndrome weight against noise rate; uniform strings sit near r/2
for omega in (0.0, 0.05, 0.10, 0.15, 0.20):
    X, _, _ = encode_batch(kp.pk, params, 50, seed=2, omega=omega)
    w = syndrome_weights(kp.sk, X)
    print(f"omega={omega:.2f}  mean weight {w.mean():7.1f}  accepted {np.mean(w <= params.decode_threshold):.2f}")

w = syndrome_weights(kp.sk, uniform_codewords(params.n, 50, seed=3))
print(f"uniform      mean weight {w.mean():7.1f}  accepted {np.mean(w <= params.decode_threshold):.2f}")
