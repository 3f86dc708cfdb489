"""Watermark detection without the public key.

Adding codewords in pairs cancels the shared pad z, leaving y = G(s+s') + e + e'
with per-bit noise w' = 2w(1-w).  A secret row h gives <h, y> = 0 with
probability (1 + (1-2w')^t)/2, so guessing many low-weight h and counting
how often some h is biased detects the watermark.  With weight-2 guesses the
same test finds duplicated rows of an unknown weak key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .combos import sample_combinations
from .gf2 import BitVector, pack_bits
from .report import AttackReport, SUCCESS, Stopwatch
from .rng import make_rng
from .scheme import codewords_to_rows


def default_pair_count(n: int) -> int:
    return 2 * math.ceil(math.log2(n)) ** 2


def default_n_times(n: int, weight: int, r: int | None = None, multiplier: float = 3.0) -> int:
    r = math.floor(0.99 * n) if r is None else r
    return min(math.comb(n, weight), math.ceil(multiplier * math.comb(n, weight) / r))


def pair_noise(omega: float) -> float:
    return 2 * omega * (1 - omega)


def biased_zero_rate(omega: float, t: int) -> float:
    return 0.5 * (1 + (1 - 2 * pair_noise(omega)) ** t)


def tau1(omega: float, t: int) -> float:
    """Midpoint between 1/2 and the zero rate of a secret row on differenced codewords."""
    if not 0 <= omega < 0.5:
        raise ValueError("omega must lie in [0, 1/2)")
    return 0.5 * (1 + (1 - 2 * pair_noise(omega)) ** t / 2)


def estimate_omega(Y: np.ndarray) -> float:
    """Heuristic: read w' off the mean weight of the differences and invert w' = 2w(1-w).

    The Gs part of y is not zero, so this overestimates w; it is only
    meaningful when the caller has nothing better.
    """
    wp = min(float(np.asarray(Y).mean()), 0.5)
    return (1 - math.sqrt(1 - 2 * wp)) / 2


@dataclass(frozen=True)
class PkFreeConfig:
    m: int
    n_times: int
    tau1: float
    tau2: int = 0
    weight: int = 3

    def __post_init__(self):
        if not 0.5 < self.tau1 < 1:
            raise ValueError("tau1 must lie in (1/2, 1)")
        if self.tau2 < 0 or int(self.tau2) != self.tau2:
            raise ValueError("tau2 must be a non-negative integer")
        if self.m < 1 or self.n_times < 1 or self.weight < 1:
            raise ValueError("m, n_times and weight must be positive")

    @classmethod
    def for_params(
        cls,
        n: int,
        omega: float,
        weight: int = 3,
        m: int | None = None,
        n_times: int | None = None,
        r: int | None = None,
        tau2: int = 0,
    ) -> "PkFreeConfig":
        return cls(
            m=default_pair_count(n) if m is None else m,
            n_times=default_n_times(n, weight, r) if n_times is None else n_times,
            tau1=tau1(omega, weight),
            tau2=tau2,
            weight=weight,
        )


@dataclass
class PkFreeVerdict:
    S: int
    tau2: int
    n_times: int
    m: int
    threshold_count: float
    hits: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return self.S > self.tau2


def pairwise_differences(targets) -> np.ndarray:
    """y_i = x_i + x_{i+m} for 2m targets, as an (m, n) bit array."""
    X = targets if isinstance(targets, np.ndarray) else codewords_to_rows(targets)
    X = np.atleast_2d(X)
    if X.shape[0] % 2:
        raise ValueError("need an even number of targets")
    m = X.shape[0] // 2
    return X[:m] ^ X[m:]


def differences_as_vectors(targets) -> list[BitVector]:
    return [BitVector.from_bits(y) for y in pairwise_differences(targets)]


def zero_counts(Y: np.ndarray, hs: np.ndarray, chunk: int = 1 << 18) -> np.ndarray:
    """For each support in ``hs``, how many rows of Y have even parity on it."""
    m = Y.shape[0]
    cols = pack_bits(np.ascontiguousarray(Y.T))  # one packed column of Y per position
    out = np.empty(hs.shape[0], dtype=np.int64)
    for i in range(0, hs.shape[0], chunk):
        h = hs[i : i + chunk]
        acc = cols[h[:, 0]].copy()
        for j in range(1, h.shape[1]):
            acc ^= cols[h[:, j]]
        out[i : i + chunk] = m - np.bitwise_count(acc).sum(axis=1, dtype=np.int64)
    return out


def pkfree_distinguish(targets, config: PkFreeConfig, seed=None, max_hits: int = 100) -> PkFreeVerdict:
    Y = pairwise_differences(targets)
    m, n = Y.shape
    if m != config.m:
        raise ValueError(f"expected {2 * config.m} targets, got {2 * m}")
    hs = sample_combinations(n, config.weight, config.n_times, make_rng(seed))
    zeros = zero_counts(Y, hs)
    limit = config.tau1 * m
    hit = zeros > limit
    idx = np.flatnonzero(hit)[:max_hits]
    return PkFreeVerdict(
        S=int(hit.sum()),
        tau2=config.tau2,
        n_times=config.n_times,
        m=m,
        threshold_count=limit,
        hits=[(hs[i].tolist(), int(zeros[i])) for i in idx],
    )


def run_attack4(targets, config: PkFreeConfig, seed=None, omega_estimated: bool = False) -> AttackReport:
    with Stopwatch() as sw:
        res = pkfree_distinguish(targets, config, seed)
    name = "attack5" if config.weight == 2 else "attack4"
    report = AttackReport(
        attack=name,
        status=SUCCESS,
        seed=seed if isinstance(seed, int) else None,
        params={"m": config.m, "n_times": config.n_times, "tau1": config.tau1, "tau2": config.tau2,
                "weight": config.weight},
        counters={"S": res.S},
        statistic=float(res.S),
        threshold=float(config.tau2),
        verdict=res.verdict,
        details={"hits": res.hits, "omega_estimated": omega_estimated},
        wall_time=sw.elapsed,
    )
    return report

