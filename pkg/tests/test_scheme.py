import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prcbreak.attack_weakkey import find_duplicate_rows
from prcbreak.complexity import epsilon_for_t, weak_key_prob_gim
from prcbreak.gf2 import BitVector, mat_vec_mul, nullspace_basis, sparse_mat_mul
from prcbreak.scheme import (
    Codeword,
    InvalidParams,
    PrcParams,
    RankDeficientKey,
    Scheme,
    Verdict,
    bernoulli_channel,
    check_keypair,
    decode,
    decode_batch,
    decode_threshold,
    encode,
    encode_batch,
    keygen,
    keygen_gim,
    keygen_llm,
    keygen_revised,
    security_lambda,
    syndrome_weights,
    uniform_codewords,
)


def threshold_oracle(r):
    """Floor of (1/2 - r^(-1/4)) r by bisection on exact rationals."""
    def ok(k):
        # k <= r/2 - r^(3/4)  <=>  (r/2 - k)^4 >= r^3 with r/2 - k >= 0
        d = Fraction(r, 2) - k
        return d >= 0 and d**4 >= r**3
    lo, hi = -r, r
    while lo < hi:
        mid = (lo + hi + 1) // 2
        lo, hi = (mid, hi) if ok(mid) else (lo, mid - 1)
    return lo


# parameters

def test_threshold_r10000():
    assert decode_threshold(10000) == 4000


@given(st.integers(1, 10**7))
def test_threshold_matches_exact_oracle(r):
    assert decode_threshold(r) == threshold_oracle(r)


def test_llm_configuration():
    p = PrcParams.llm(512, 3)
    assert p.r == math.floor(0.99 * 512) == 506
    assert p.g == p.lam == math.floor(math.log2(math.comb(512, 3)))
    assert p.matches_configuration()


def test_security_lambda_exact_at_powers_of_two():
    # C(2^k, 1) = 2^k exactly, where a float log could round down
    for k in (10, 17, 40):
        assert security_lambda(2**k, 1) == k


@pytest.mark.parametrize("kw", [dict(n=100, r=100, g=5, t=3, lam=5), dict(n=100, r=50, g=0, t=3, lam=5),
                                dict(n=100, r=50, g=5, t=2, lam=5), dict(n=100, r=50, g=5, t=3, lam=5, omega=0.5)])
def test_invalid_params(kw):
    with pytest.raises(InvalidParams):
        PrcParams(**kw)


def test_gim_layout_too_small():
    with pytest.raises(InvalidParams):
        PrcParams.gim(256, 3)


def test_llm_keygen_rejects_wide_rows():
    with pytest.raises(InvalidParams):
        keygen_llm(PrcParams.llm(100, 5, r=97), 0)


# key generation

@pytest.mark.parametrize("scheme", list(Scheme))
def test_keypair_consistency_100_seeds(scheme):
    p = PrcParams.for_scheme(scheme, 512, 3, r=506 if scheme is Scheme.GIM else None)
    for seed in range(100):
        kp = keygen(p, seed)
        assert kp.pk.G.rows == 512 and kp.pk.G.cols == p.g
        assert (kp.sk.P.row_weights() == 3).all()
        assert sparse_mat_mul(kp.sk.P, kp.pk.G).is_zero()


@pytest.mark.parametrize("gen", [keygen_llm, keygen_gim, keygen_revised])
def test_keygen_deterministic(gen):
    p = PrcParams.llm(512, 3)
    a, b = gen(p, 7), gen(p, 7)
    assert a.pk == b.pk and a.sk == b.sk
    assert gen(p, 8).pk != a.pk


def test_llm_structure_before_permutation_is_hidden_but_sums_hold():
    # each P row is a weight-t dual vector: the t selected rows of G sum to zero
    p = PrcParams.llm(512, 4)
    kp = keygen_llm(p, 3)
    G = kp.pk.G.to_bits()
    for sup in kp.sk.P.row_supports[:50]:
        assert not np.bitwise_xor.reduce(G[sup], axis=0).any()


def test_gim_first_row_uses_base_rows_only():
    # the first generated row can only combine base rows, as in the LLM generator
    p = PrcParams.gim(64, 3, r=40, g=40)
    kp = keygen_gim(p, 0)
    assert check_keypair(kp)


def test_revised_rank_reported_or_enforced():
    p = PrcParams.revised(512, 3)
    kp = keygen_revised(p, 1)
    assert kp.info["rank"] + kp.info["nullity"] == 512
    assert kp.info["rank"] <= p.r
    with pytest.raises(RankDeficientKey):
        keygen_revised(p, 1, require_full_rank=True, max_resamples=2)
    full = keygen_revised(PrcParams.revised(512, 3, r=256), 1, require_full_rank=True)
    assert full.info["rank"] == 256


def test_revised_select_columns_are_nullspace_columns():
    p = PrcParams.revised(128, 3, r=64, g=10)
    kp = keygen_revised(p, 4, g_columns="select")
    assert check_keypair(kp) and kp.pk.G.rank() == 10


def gim_three_way_model(n, r, t):
    """Row i collides with an earlier generated row j=a+b by picking {a,b}, {a,j} or {b,j}.

    Only valid for t = 3; counts three bad pairs per earlier generated row.
    """
    assert t == 3
    lp = sum(math.log1p(-3 * (i - 1) / math.comb(n - r + i - 1, 2)) for i in range(1, r + 1))
    return -math.expm1(lp)


def test_gim_duplicate_rate_matches_weak_key_formula():
    n, r, t, trials = 64, 40, 3, 500
    p = PrcParams.gim(n, t, r=r, g=40)
    hits = sum(bool(find_duplicate_rows(keygen_gim(p, s).pk.G)) for s in range(trials))
    q = weak_key_prob_gim(n, r, t)
    assert abs(hits / trials - q) <= 3 * math.sqrt(q * (1 - q) / trials)


def test_gim_duplicate_rate_matches_three_way_model():
    n, r, t, trials = 64, 40, 3, 500
    p = PrcParams.gim(n, t, r=r, g=40)
    hits = sum(bool(find_duplicate_rows(keygen_gim(p, s).pk.G)) for s in range(trials))
    q = gim_three_way_model(n, r, t)
    assert abs(hits / trials - q) <= 3 * math.sqrt(q * (1 - q) / trials)


def test_revised_duplicate_rate_consistent_with_birthday_bound():
    # the claim under test: G rows behave like n i.i.d. uniform rows of F_2^g
    n, t, trials = 128, 3, 500
    p = PrcParams.revised(n, t, r=64, g=16)
    hits = sum(bool(find_duplicate_rows(keygen_revised(p, s).pk.G)) for s in range(trials))
    q = -math.expm1(sum(math.log1p(-i / 2**16) for i in range(n)))
    assert abs(hits / trials - q) <= 3 * math.sqrt(q * (1 - q) / trials)


def _rows_sharing_all_but_one(P, t):
    seen = {}
    for i, sup in enumerate(P.row_supports):
        for drop in range(t):
            key = tuple(np.delete(sup, drop))
            if key in seen and seen[key][1] != sup[drop]:
                return True
            seen.setdefault(key, (i, sup[drop]))
    return False


def test_revised_shared_pairs_force_duplicate_rows():
    # P rows {a,b,c} and {a,b,d} make c+d a dual vector, so G rows c and d agree
    p = PrcParams.revised(128, 3, r=64, g=16)
    forced = 0
    for seed in range(200):
        kp = keygen_revised(p, seed)
        if _rows_sharing_all_but_one(kp.sk.P, 3):
            forced += 1
            assert find_duplicate_rows(kp.pk.G)
    assert forced > 100


# encoding and decoding

@pytest.fixture(scope="module")
def key4096():
    return keygen_llm(PrcParams.llm(4096, 3), 11)


def test_noiseless_codeword_in_column_space():
    p = PrcParams.llm(512, 3)
    kp = keygen_llm(p, 2)
    x, tr = encode(kp.pk, p, 5, omega=0)
    assert tr.e.weight() == 0
    assert x.x + kp.pk.z == mat_vec_mul(kp.pk.G, tr.s)
    H = nullspace_basis(kp.pk.G.transpose()).transpose()
    assert (H @ (x.x + kp.pk.z)).weight() == 0


def test_zero_message_gives_pad():
    p = PrcParams.llm(512, 3)
    kp = keygen_llm(p, 2)
    for seed in range(200):
        x, tr = encode(kp.pk, p, seed, omega=0)
        if tr.s.weight() == 0:
            assert x.x == kp.pk.z
            break
    else:
        # s = 0 is a 2^-g event; check the identity directly instead
        assert mat_vec_mul(kp.pk.G, BitVector.zeros(p.g)) + kp.pk.z == kp.pk.z


def test_noise_weight_and_accept(key4096):
    p = key4096.params
    x, tr = encode(key4096.pk, p, 9, omega=0.05)
    assert 0.03 <= tr.e.weight() / 4096 <= 0.07
    assert decode(key4096.sk, p, x) is Verdict.ACCEPT


def test_noiseless_always_accepts(key4096):
    X, _, _ = encode_batch(key4096.pk, key4096.params, 200, 1, omega=0)
    assert (syndrome_weights(key4096.sk, X) == 0).all()


def test_uniform_rejected(key4096):
    acc = decode_batch(key4096.sk, uniform_codewords(4096, 1000, 3))
    assert acc.mean() <= 0.001


def test_robustness_at_rho_minus_margin(key4096):
    """Channel noise at rho - 0.05 should still decode; fails for the chained generator."""
    rho = 0.5 - epsilon_for_t(key4096.params.r, 3)
    X, _, _ = encode_batch(key4096.pk, key4096.params, 1000, 4, omega=rho - 0.05)
    assert decode_batch(key4096.sk, X).mean() >= 0.99


def test_robustness_at_rho_minus_margin_revised():
    kp = keygen_revised(PrcParams.revised(4096, 3), 5)
    rho = 0.5 - epsilon_for_t(kp.params.r, 3)
    X, _, _ = encode_batch(kp.pk, kp.params, 1000, 4, omega=rho - 0.05)
    assert decode_batch(kp.sk, X).mean() >= 0.99


def test_batch_matches_single(key4096):
    p = key4096.params.with_omega(0.1)
    X, _, _ = encode_batch(key4096.pk, p, 5, 3)
    for row, v in zip(X, decode_batch(key4096.sk, X)):
        assert (decode(key4096.sk, p, Codeword(BitVector.from_bits(row))) is Verdict.ACCEPT) == v


# channel

def test_channel_extremes():
    x = Codeword(BitVector.random(300, np.random.default_rng(0)))
    assert bernoulli_channel(x, 0, 1).x == x.x
    assert bernoulli_channel(x, 1, 1).x == x.x + BitVector.from_bits(np.ones(300, np.uint8))
    with pytest.raises(ValueError):
        bernoulli_channel(x, 1.5)


def test_channel_flip_count():
    x = Codeword(BitVector.zeros(10000))
    flips = bernoulli_channel(x, 0.1, 42).x.weight()
    assert abs(flips - 1000) <= 3 * math.sqrt(10000 * 0.1 * 0.9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_channel_deterministic(seed):
    x = Codeword(BitVector.random(257, np.random.default_rng(seed)))
    assert bernoulli_channel(x, 0.3, seed) == bernoulli_channel(x, 0.3, seed)
