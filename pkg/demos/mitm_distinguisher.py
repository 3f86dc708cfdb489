"""
Finding parity checks from the public key
=========================================

Split the rows of G in two halves, list sums of small row subsets on each
side, and join on equal sums.  Every match is a weight-3 vector in the dual
of G, and it biases the parity of watermarked strings.
"""

from prcbreak.attack_mitm import MitmConfig, decode_aligned_tau, distinguish, recover_duals, tpr_fpr, zero_ratio_watermarked
from prcbreak.scheme import PrcParams, encode_batch, keygen_llm, uniform_codewords

params = PrcParams.llm(4096, 3, omega=0.05)
kp = keygen_llm(params, seed=7)

tau = decode_aligned_tau(params.r)
config = MitmConfig.for_params(params.n, params.r, params.t, l=8, tau=tau)
print("list caps:", config.list_cap_1, config.list_cap_2)

dual, used, rounds = recover_duals(kp.pk, params.t, params.r, config, seed=7)
secret = {tuple(row) for row in kp.sk.P.support_array().tolist()}
hits = sum(tuple(v) in secret for v in dual.supports.tolist())
print(f"{len(dual)} dual vectors after {rounds} round(s); {hits} are rows of the secret P")

X, _, _ = encode_batch(kp.pk, params, 4, seed=8)
U = uniform_codewords(params.n, 4, seed=9)
print("watermarked:", distinguish(dual, kp.pk.z, X, tau))
print("uniform:    ", distinguish(dual, kp.pk.z, U, tau))

# what the binomial tail predicts for the same sample size
p = zero_ratio_watermarked(params.omega, params.t)
print("predicted TPR/FPR:", tpr_fpr(p, 4, len(dual), tau))
