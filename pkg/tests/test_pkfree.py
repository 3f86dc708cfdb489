import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prcbreak.attack_pkfree import (
    PkFreeConfig,
    biased_zero_rate,
    default_n_times,
    default_pair_count,
    differences_as_vectors,
    estimate_omega,
    pair_noise,
    pairwise_differences,
    pkfree_distinguish,
    run_attack4,
    tau1,
    zero_counts,
)
from prcbreak.gf2 import BitMatrix
from prcbreak.scheme import PrcParams, PublicKey, encode_batch, keygen_llm, uniform_codewords

TOY = PrcParams.llm(64, 3, omega=0.02, r=56, g=12)


def planted_key(seed: int, a: int = 5, b: int = 40) -> PublicKey:
    pk = keygen_llm(TOY, seed).pk
    bits = pk.G.to_bits()
    bits[b] = bits[a]
    return PublicKey(BitMatrix.from_bits(bits), pk.z)


# differencing

def test_identical_pair_cancels(rng):
    x = rng.integers(0, 2, size=(1, 50), dtype=np.uint8)
    assert not pairwise_differences(np.vstack([x, x])).any()


def test_pad_cancels(rng):
    z = rng.integers(0, 2, size=50, dtype=np.uint8)
    e = (rng.random(50) < 0.2).astype(np.uint8)
    y = differences_as_vectors(np.vstack([z, z ^ e]))
    assert len(y) == 1 and np.array_equal(y[0].to_bits(), e)


def test_odd_count_rejected():
    with pytest.raises(ValueError):
        pairwise_differences(np.zeros((3, 8), dtype=np.uint8))


def test_pair_noise_rate():
    p = PrcParams.llm(1024, 3, omega=0.1)
    kp = keygen_llm(p, 0)
    X, S, E = encode_batch(kp.pk, p, 200, 1)
    Y = pairwise_differences(X)
    G = kp.pk.G.to_bits().astype(np.int64)
    GS = ((S[:100] ^ S[100:]).astype(np.int64) @ G.T) & 1
    residual = Y ^ GS.astype(np.uint8)
    assert np.array_equal(residual, E[:100] ^ E[100:])
    w = pair_noise(0.1)
    assert w == pytest.approx(0.18)
    assert abs(residual.mean() - w) <= 3 * math.sqrt(w * (1 - w) / residual.size)


def test_secret_row_zero_rate():
    p = PrcParams.llm(1024, 3, omega=0.1)
    kp = keygen_llm(p, 0)
    X, _, _ = encode_batch(kp.pk, p, 4000, 2)
    Y = pairwise_differences(X)
    zeros = zero_counts(Y, kp.sk.P.support_array()[:50])
    q = biased_zero_rate(0.1, 3)
    total = zeros.sum() / (50 * Y.shape[0])
    assert abs(total - q) <= 3 * math.sqrt(q * (1 - q) / (50 * Y.shape[0])) * math.sqrt(50)


def test_zero_counts_direct(rng):
    Y = rng.integers(0, 2, size=(70, 30), dtype=np.uint8)
    hs = np.array([[0, 4, 9], [2, 3, 29], [1, 5, 7]])
    direct = [(Y[:, h].sum(axis=1) % 2 == 0).sum() for h in hs]
    assert zero_counts(Y, hs).tolist() == direct


# thresholds

def test_tau1_noiseless():
    assert tau1(0.0, 3) == 0.75


def test_tau1_direct_value():
    assert tau1(0.1, 3) == pytest.approx(0.5 * (1 + 0.64**3 / 2)) == pytest.approx(0.565536)


@given(st.floats(0, 0.49), st.integers(1, 12))
def test_tau1_is_midpoint(omega, t):
    tau, hi = tau1(omega, t), biased_zero_rate(omega, t)
    assert tau == pytest.approx((0.5 + hi) / 2)
    if hi > 0.5 + 1e-12:
        assert 0.5 < tau < hi


def test_config_defaults():
    cfg = PkFreeConfig.for_params(4096, 0.02)
    assert cfg.m == default_pair_count(4096) == 2 * 12**2
    assert cfg.n_times == math.ceil(3 * math.comb(4096, 3) / math.floor(0.99 * 4096))
    assert default_n_times(8, 3, r=1) == math.comb(8, 3)
    with pytest.raises(ValueError):
        PkFreeConfig(1, 1, 0.4)
    with pytest.raises(ValueError):
        PkFreeConfig(1, 1, 0.6, tau2=-1)


def test_estimate_omega_inverts_pair_noise():
    Y = (np.random.default_rng(0).random((400, 500)) < pair_noise(0.1)).astype(np.uint8)
    assert estimate_omega(Y) == pytest.approx(0.1, abs=0.005)


# distinguisher

def test_uniform_targets_rarely_flagged():
    cfg = PkFreeConfig.for_params(4096, 0.02)
    flagged = sum(pkfree_distinguish(uniform_codewords(4096, 2 * cfg.m, s), cfg, s).verdict for s in range(3))
    assert flagged == 0


def test_toy_advantage_above_half():
    cfg = PkFreeConfig.for_params(64, 0.02, r=TOY.r)
    tp = fp = 0
    for s in range(40):
        kp = keygen_llm(TOY, s)
        X, _, _ = encode_batch(kp.pk, TOY, 2 * cfg.m, s)
        tp += pkfree_distinguish(X, cfg, s).verdict
        fp += pkfree_distinguish(uniform_codewords(64, 2 * cfg.m, 500 + s), cfg, s).verdict
    assert tp / 40 >= 0.3
    assert (1 + tp / 40) / 2 - fp / 80 > 0.5


def test_more_pairs_no_more_false_flags():
    rates = []
    for m in (40, 80, 160):
        cfg = PkFreeConfig(m, 2000, tau1(0.02, 3))
        rates.append(sum(pkfree_distinguish(uniform_codewords(64, 2 * m, s), cfg, s).verdict for s in range(30)))
    assert rates[0] >= rates[1] >= rates[2]


def test_target_count_must_match():
    with pytest.raises(ValueError):
        pkfree_distinguish(uniform_codewords(64, 10, 0), PkFreeConfig(4, 10, 0.6), 0)


def test_budget_above_slice_rejected():
    with pytest.raises(ValueError):
        pkfree_distinguish(uniform_codewords(8, 8, 0), PkFreeConfig(4, 57, 0.6), 0)


def test_planted_duplicates_trigger_weight_two():
    cfg = PkFreeConfig.for_params(64, 0.02, weight=2, n_times=math.comb(64, 2))
    for s in range(20):
        pk = planted_key(s)
        X, _, _ = encode_batch(pk, TOY, 2 * cfg.m, s)
        v = pkfree_distinguish(X, cfg, s)
        assert v.S >= 1
        assert zero_counts(pairwise_differences(X), np.array([[5, 40]]))[0] > cfg.tau1 * cfg.m


def test_run_attack4_names_and_report():
    cfg = PkFreeConfig.for_params(64, 0.02, weight=2, n_times=100)
    X = uniform_codewords(64, 2 * cfg.m, 0)
    rep = run_attack4(X, cfg, 1, omega_estimated=True)
    assert rep.attack == "attack5" and rep.details["omega_estimated"] is True
    assert rep.statistic == rep.counters["S"]
    cfg3 = PkFreeConfig.for_params(64, 0.02, r=TOY.r)
    assert run_attack4(uniform_codewords(64, 2 * cfg3.m, 0), cfg3, 1).attack == "attack4"
