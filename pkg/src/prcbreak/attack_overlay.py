"""Noise overlay: recover the encoder noise, then add disjoint noise on top.

Random extra noise at rate mu partly cancels the existing noise, giving a
total rate of w + mu - 2 w mu.  Knowing e lets the attacker place all mu*n
extra flips outside supp(e), so the total is exactly w(e) + ceil(mu n).
The noise itself is recovered by Prange information-set decoding on the
syndrome H(x + z) = He.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gf2 import BitMatrix, BitVector, _eliminate, nullspace_basis
from .report import AttackReport, FAILURE, SUCCESS, Stopwatch
from .rng import make_rng
from .scheme import Codeword, PrcParams, PublicKey, decode_threshold


class IsdFailure(RuntimeError):
    def __init__(self, iterations: int):
        super().__init__(f"no candidate within the weight window after {iterations} iterations")
        self.iterations = iterations


class NoOverlayGap(ValueError):
    pass


def default_weight_window(n: int, omega: float) -> tuple[int, int]:
    return 0, math.floor(omega * n + 4 * math.sqrt(n * omega * (1 - omega)))


@dataclass(frozen=True)
class OverlayConfig:
    mu: float
    max_iters: int = 10_000
    expected_weight_window: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if not 0 <= self.mu <= 0.5:
            raise ValueError("mu must lie in [0, 1/2]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    @classmethod
    def for_params(cls, params: PrcParams, mu: float | None = None, max_iters: int = 10_000) -> "OverlayConfig":
        mu = choose_mu(params.r, params.t, params.omega) if mu is None else mu
        return cls(mu, max_iters, default_weight_window(params.n, params.omega))


@dataclass(frozen=True)
class SyndromeInstance:
    H: BitMatrix
    v: BitVector


@dataclass(frozen=True)
class IsdResult:
    e: BitVector
    iterations: int


@dataclass(frozen=True)
class OverlayOutcome:
    codeword: Codeword
    e: BitVector
    e_prime: BitVector
    iterations: int


def dual_matrix(G: BitMatrix) -> BitMatrix:
    """Rows span {h : hG = 0}; there are n - rank(G) of them."""
    return nullspace_basis(G.transpose()).transpose()


def syndrome_instance(pk: PublicKey, x: Codeword) -> SyndromeInstance:
    H = dual_matrix(pk.G)
    return SyndromeInstance(H, H @ (x.x + pk.z))


def _entropy(seed) -> int:
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(0, 2**63))
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(2, np.uint64)[0])
    return int(np.random.SeedSequence(seed).entropy)


def _trial(H_words: np.ndarray, v_bits: np.ndarray, n: int, window, entropy: int, index: int):
    """One Prange step: random column order, eliminate, read e off the pivot columns."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=(index,))))
    order = rng.permutation(n)
    words = H_words.copy()
    aug = v_bits.copy()
    _, pivots = _eliminate(words, n, order, aug)
    if np.any(aug[pivots.size :]):
        return None  # inconsistent system
    e = np.zeros(n, dtype=np.uint8)
    e[pivots] = aug[: pivots.size]
    w = int(e.sum())
    return e if window[0] <= w <= window[1] else None


def prange_isd(inst: SyndromeInstance, config: OverlayConfig, seed=None, workers: int = 1) -> IsdResult:
    """Find e with He = v and weight in the window, or raise :class:`IsdFailure`.

    Trial i always draws its column order from child seed i, and the lowest
    successful trial index wins, so the result does not depend on ``workers``.
    """
    H, v = inst.H, inst.v
    n = H.cols
    v_bits = v.to_bits()
    window = config.expected_weight_window
    entropy = _entropy(seed)
    words = np.array(H.words)
    step = max(1, workers)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for start in range(0, config.max_iters, step):
            idx = range(start, min(start + step, config.max_iters))
            if pool is None:
                results = [_trial(words, v_bits, n, window, entropy, i) for i in idx]
            else:
                results = list(pool.map(lambda i: _trial(words, v_bits, n, window, entropy, i), idx))
            for i, e in zip(idx, results):
                if e is not None:
                    ev = BitVector.from_bits(e)
                    if H @ ev != v:
                        raise AssertionError("ISD candidate does not match the syndrome")
                    return IsdResult(ev, i + 1)
    finally:
        if pool is not None:
            pool.shutdown()
    raise IsdFailure(config.max_iters)


def build_overlay(e: BitVector, mu: float, seed=None) -> BitVector:
    """Weight ceil(mu n) vector supported outside supp(e), uniform among such."""
    n = e.length
    k = math.ceil(round(mu * n, 9))
    free = np.flatnonzero(e.to_bits() == 0)
    if k > free.size:
        raise ValueError(f"overlay weight {k} exceeds the {free.size} free positions")
    rng = make_rng(seed)
    return BitVector.from_support(n, rng.choice(free, size=k, replace=False))


def noise_threshold(r: int, t: int) -> float:
    """Noise rate at which the expected syndrome weight reaches the decode threshold."""
    theta = decode_threshold(r) / r
    return (1 - (1 - 2 * theta) ** (1 / t)) / 2


def mu_interval(r: int, t: int, omega: float) -> tuple[float, float]:
    """Open interval of mu with w + mu above the noise threshold and w + mu - 2 w mu below it."""
    p = noise_threshold(r, t)
    lo = p - omega
    hi = lo / (1 - 2 * omega)
    return lo, hi


def choose_mu(r: int, t: int, omega: float, rule: str = "midpoint") -> float:
    lo, hi = mu_interval(r, t, omega)
    if lo <= 0 or hi <= lo:
        raise NoOverlayGap(f"no overlay rate separates the two totals at omega={omega}")
    if rule == "smallest":
        return math.nextafter(lo, hi)
    if rule == "midpoint":
        return (lo + hi) / 2
    raise ValueError("rule must be 'midpoint' or 'smallest'")


def prange_success_probability(n: int, k: int, w: int) -> float:
    """Chance a uniform k-set of columns avoids all w error positions."""
    if w + k > n:
        return 0.0
    return math.comb(n - w, k) / math.comb(n, k)


def overlay_attack(
    pk: PublicKey,
    params: PrcParams,
    x: Codeword,
    config: OverlayConfig,
    seed=None,
    workers: int = 1,
) -> OverlayOutcome:
    """Recover e from x and return x + e' with e' disjoint from e."""
    isd_rng, overlay_rng = make_rng(seed).spawn(2)
    if config.mu == 0:
        zero = BitVector.zeros(x.n)
        return OverlayOutcome(x, zero, zero, 0)
    res = prange_isd(syndrome_instance(pk, x), config, isd_rng, workers)
    e_prime = build_overlay(res.e, config.mu, overlay_rng)
    return OverlayOutcome(Codeword(x.x + e_prime, "attacked"), res.e, e_prime, res.iterations)


def run_attack3(
    pk: PublicKey,
    params: PrcParams,
    x: Codeword,
    config: OverlayConfig,
    seed=None,
    workers: int = 1,
) -> tuple[AttackReport, OverlayOutcome | None]:
    g_rank = pk.G.rank()
    report = AttackReport(
        attack="attack3",
        status=SUCCESS,
        seed=seed if isinstance(seed, int) else None,
        params={**params.as_dict(), "mu": config.mu, "max_iters": config.max_iters},
        counters={"g_rank": g_rank},
        details={"weight_window": list(config.expected_weight_window)},
    )
    if g_rank < pk.G.cols:
        report.details["note"] = f"G has rank {g_rank} < {pk.G.cols}; the dual gains rows"
    outcome = None
    with Stopwatch() as sw:
        try:
            outcome = overlay_attack(pk, params, x, config, seed, workers)
        except IsdFailure as exc:
            report.status = FAILURE
            report.failure_reason = str(exc)
            report.counters["iterations"] = exc.iterations
    report.wall_time = sw.elapsed
    if outcome is not None:
        report.counters.update(
            iterations=outcome.iterations,
            recovered_weight=outcome.e.weight(),
            overlay_weight=outcome.e_prime.weight(),
        )
    return report, outcome
