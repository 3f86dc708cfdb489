"""
Simulated carriers
==================

Text: token bits follow the model marginal and only copy the codeword
where the marginal is flat.  Images: the codeword sets latent signs, and
inversion error flips some of them.
"""

from prcbreak.channels import flip_rate_for_kappa, kappa_for_flip_rate, noise_std_for_flip_rate, simulate

for kappa in (1.0, 4.0, 16.0, 64.0):
    res = simulate("llm", 1 << 16, seed=1, kappa=kappa)
    print(f"kappa={kappa:5.1f} flip {res['flip_rate']:.4f} (expected {flip_rate_for_kappa(kappa):.4f})")

print("kappa for a 0.10 flip rate:", kappa_for_flip_rate(0.10))

std = noise_std_for_flip_rate(0.074)
print("inversion noise std for 0.074:", std)
print(simulate("gim", 1 << 16, seed=2, noise_std=std))
