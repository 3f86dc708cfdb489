"""
Overlaying noise the decoder cannot absorb
==========================================

Recover the encoder noise e with Prange decoding, then flip positions
outside supp(e) so none of the new flips cancel old ones.
"""

import numpy as np

from prcbreak.attack_overlay import OverlayConfig, mu_interval, overlay_attack
from prcbreak.scheme import PrcParams, Verdict, bernoulli_channel, decode, encode, keygen_llm, syndrome_weight

params = PrcParams.llm(1024, 3, omega=0.02, g=20, r=1004)
kp = keygen_llm(params, seed=0)
config = OverlayConfig.for_params(params)
print("mu interval:", mu_interval(params.r, params.t, params.omega), "chosen", config.mu)

adv, rnd, exact = [], [], 0
for s in range(30):
    x, trace = encode(kp.pk, params, seed=s)
    out = overlay_attack(kp.pk, params, x, config, seed=s)
    exact += out.e == trace.e
    adv.append(syndrome_weight(kp.sk, out.codeword))
    rnd.append(syndrome_weight(kp.sk, bernoulli_channel(x, config.mu, seed=100 + s)))

print(f"noise recovered exactly in {exact}/30 runs")
print("threshold:", params.decode_threshold)
print(f"overlay syndrome weight {np.mean(adv):.1f} +- {np.std(adv):.1f}")
print(f"random  syndrome weight {np.mean(rnd):.1f} +- {np.std(rnd):.1f}")
# the gap between the two means is small next to either spread
print("overlay rejected:", np.mean(np.array(adv) > params.decode_threshold))
print("random accepted: ", np.mean(np.array(rnd) <= params.decode_threshold))
assert decode(kp.sk, params, x) is Verdict.ACCEPT
