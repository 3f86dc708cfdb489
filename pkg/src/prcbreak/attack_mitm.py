"""Partial secret-key recovery by meet-in-the-middle, plus the parity distinguisher.

Weight-t vectors v with vG = 0 are found by splitting the rows of G into
two halves, listing sums of ceil(t/2) rows from the first half and
floor(t/2) rows from the second, and joining equal sums.  Shrunken
random sub-lists trade recovered-row count for time.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .combos import all_combinations, sample_combinations
from .gf2 import BitMatrix, BitVector
from .report import AttackReport, DistinguisherVerdict, FAILURE, SUCCESS, Stopwatch
from .rng import make_rng
from .scheme import PublicKey, codewords_to_rows


def default_tau(t: int) -> float:
    return 0.60 if t <= 3 else 0.55


def decode_aligned_tau(r: int) -> float:
    return 0.5 + r**-0.25


def half_sizes(n: int) -> tuple[int, int]:
    n1 = (n + 1) // 2
    return n1, n - n1


def split_weights(t: int) -> tuple[int, int]:
    t1 = (t + 1) // 2
    return t1, t - t1


def split_probability(n: int, t: int) -> float:
    """Chance that a uniform weight-t vector has the t1/t2 half split."""
    n1, n2 = half_sizes(n)
    t1, t2 = split_weights(t)
    return math.comb(n1, t1) * math.comb(n2, t2) / math.comb(n, t)


@dataclass(frozen=True)
class MitmConfig:
    l: float
    list_cap_1: int
    list_cap_2: int
    tau: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.5 < self.tau < 1:
            raise ValueError("tau must lie in (1/2, 1)")
        if self.list_cap_1 < 1 or self.list_cap_2 < 1:
            raise ValueError("list caps must be positive")

    @classmethod
    def for_params(cls, n: int, r: int, t: int, l: float = 8.0, tau: float | None = None) -> "MitmConfig":
        """Caps giving l expected secret rows with the two sub-lists balanced in size."""
        n1, n2 = half_sizes(n)
        t1, t2 = split_weights(t)
        c1, c2 = math.comb(n1, t1), math.comb(n2, t2)
        r_split = split_probability(n, t) * r
        frac = min(l / r_split, 1.0)
        if t % 2 == 0 and n1 == n2:
            a = b = math.sqrt(frac)
        else:
            a = math.sqrt(frac * c2 / c1)
            b = math.sqrt(frac * c1 / c2)
            if b > 1:
                a, b = frac, 1.0
            elif a > 1:
                a, b = 1.0, frac
        cap1 = min(c1, max(1, math.ceil(a * c1)))
        cap2 = min(c2, max(1, math.ceil(b * c2)))
        return cls(l, cap1, cap2, default_tau(t) if tau is None else tau, cap1 / c1, cap2 / c2)

    @classmethod
    def full(cls, n: int, t: int, tau: float | None = None) -> "MitmConfig":
        n1, n2 = half_sizes(n)
        t1, t2 = split_weights(t)
        c1, c2 = math.comb(n1, t1), math.comb(n2, t2)
        return cls(math.inf, c1, c2, default_tau(t) if tau is None else tau, 1.0, 1.0)

    def scaled(self, factor: float, n: int, t: int) -> "MitmConfig":
        n1, n2 = half_sizes(n)
        t1, t2 = split_weights(t)
        c1, c2 = math.comb(n1, t1), math.comb(n2, t2)
        cap1 = min(c1, math.ceil(self.list_cap_1 * factor))
        cap2 = min(c2, math.ceil(self.list_cap_2 * factor))
        return MitmConfig(self.l, cap1, cap2, self.tau, cap1 / c1, cap2 / c2)


@dataclass(frozen=True)
class SumList:
    """Row-index tuples (global row numbers) and the packed sum of those rows of G."""

    tuples: np.ndarray
    sums: np.ndarray

    def __len__(self) -> int:
        return self.tuples.shape[0]


@dataclass(frozen=True)
class RecoveredDual:
    supports: np.ndarray  # (count, t), sorted rows, lexicographic order
    n: int

    def __len__(self) -> int:
        return self.supports.shape[0]

    @property
    def vectors(self) -> list[BitVector]:
        return [BitVector.from_support(self.n, s) for s in self.supports]


def _row_sums(G: BitMatrix, tuples: np.ndarray) -> np.ndarray:
    if tuples.shape[1] == 0:
        return np.zeros((tuples.shape[0], G.words.shape[1]), dtype=np.uint64)
    return np.bitwise_xor.reduce(G.words[tuples], axis=1)


def build_half_lists(G: BitMatrix, t: int, config: MitmConfig, seed=None) -> tuple[SumList, SumList]:
    rng = make_rng(seed)
    n1, n2 = half_sizes(G.rows)
    t1, t2 = split_weights(t)
    lo = sample_combinations(n1, t1, config.list_cap_1, rng)
    hi = sample_combinations(n2, t2, config.list_cap_2, rng) + n1
    return SumList(lo, _row_sums(G, lo)), SumList(hi, _row_sums(G, hi))


def _key(sums: np.ndarray) -> np.ndarray:
    if sums.shape[1] == 1:
        return sums[:, 0]
    h = np.zeros(sums.shape[0], dtype=np.uint64)
    mult = np.uint64(0x9E3779B97F4A7C15)
    for j in range(sums.shape[1]):
        h = (h ^ sums[:, j]) * mult
    return h


def _join_chunk(k1: np.ndarray, list1: SumList, k2_sorted: np.ndarray, order2: np.ndarray, list2: SumList, rows):
    left = np.searchsorted(k2_sorted, k1[rows], side="left")
    right = np.searchsorted(k2_sorted, k1[rows], side="right")
    counts = right - left
    hit = counts > 0
    if not hit.any():
        return np.zeros((0, list1.tuples.shape[1] + list2.tuples.shape[1]), dtype=np.int64)
    i1 = np.repeat(rows[hit], counts[hit])
    starts = np.repeat(left[hit], counts[hit])
    offsets = np.arange(i1.size) - np.repeat(np.cumsum(counts[hit]) - counts[hit], counts[hit])
    i2 = order2[starts + offsets]
    same = (list1.sums[i1] == list2.sums[i2]).all(axis=1)
    return np.hstack([list1.tuples[i1[same]], list2.tuples[i2[same]]])


def merge_join(list1: SumList, list2: SumList, n: int | None = None, workers: int = 1) -> RecoveredDual:
    """Every (tuple1, tuple2) pair whose sums cancel, as sorted index supports."""
    width = list1.tuples.shape[1] + list2.tuples.shape[1]
    if n is None:
        n = int(max(list1.tuples.max(initial=-1), list2.tuples.max(initial=-1))) + 1
    if len(list1) == 0 or len(list2) == 0:
        return RecoveredDual(np.zeros((0, width), dtype=np.int64), n)
    k1, k2 = _key(list1.sums), _key(list2.sums)
    order2 = np.argsort(k2, kind="stable")
    k2_sorted = k2[order2]
    chunks = np.array_split(np.arange(len(list1)), max(1, workers))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda c: _join_chunk(k1, list1, k2_sorted, order2, list2, c), chunks))
    else:
        parts = [_join_chunk(k1, list1, k2_sorted, order2, list2, c) for c in chunks]
    found = np.sort(np.vstack(parts), axis=1)
    if found.shape[1] > 1:
        found = found[(np.diff(found, axis=1) > 0).all(axis=1)]
    if found.shape[0]:
        found = np.unique(found, axis=0)
    return RecoveredDual(found.astype(np.int64), n)


def verify_duals(G: BitMatrix, dual: RecoveredDual, t: int) -> np.ndarray:
    """Boolean mask of supports that have weight t and cancel against G."""
    if len(dual) == 0:
        return np.zeros(0, dtype=bool)
    weight_ok = np.array([np.unique(s).size == t for s in dual.supports])
    return weight_ok & ~_row_sums(G, dual.supports).any(axis=1)


def brute_force_duals(G: BitMatrix, t: int) -> np.ndarray:
    """All weight-t duals with the t1/t2 half split, by exhaustive enumeration."""
    n1, n2 = half_sizes(G.rows)
    t1, t2 = split_weights(t)
    out = []
    lo_all = all_combinations(n1, t1)
    for hi in itertools.combinations(range(n1, G.rows), t2):
        hi = np.asarray(hi, dtype=np.int64)
        cand = np.hstack([lo_all, np.broadcast_to(hi, (lo_all.shape[0], t2))])
        ok = ~_row_sums(G, cand).any(axis=1)
        out.append(cand[ok])
    res = np.vstack(out) if out else np.zeros((0, t), dtype=np.int64)
    res = np.sort(res, axis=1)
    return np.unique(res, axis=0) if res.shape[0] else res


def expected_recovered_rows(n: int, r: int, t: int, config: MitmConfig) -> float:
    return config.alpha * config.beta * split_probability(n, t) * r


def zero_ratio_watermarked(omega: float, t: int) -> float:
    return 0.5 * (1 + (1 - 2 * omega) ** t)


def parity_matrix(supports: np.ndarray, X: np.ndarray) -> np.ndarray:
    """(targets, duals) array of parities of each target on each support."""
    if supports.shape[0] == 0:
        return np.zeros((X.shape[0], 0), dtype=np.uint8)
    return np.bitwise_xor.reduce(X[:, supports], axis=-1)


def distinguish(recovered: RecoveredDual, z: BitVector, targets, tau: float) -> DistinguisherVerdict:
    """Share of zero parities <v, x + z> over all (dual, target) pairs against tau."""
    if len(recovered) == 0:
        raise ValueError("no recovered duals; rerun the search with larger lists")
    X = targets if isinstance(targets, np.ndarray) else codewords_to_rows(targets)
    X = np.atleast_2d(X) ^ z.to_bits()[None, :]
    par = parity_matrix(recovered.supports, X)
    return DistinguisherVerdict(int(par.size - par.sum()), int(par.size), tau)


def _threshold_count(tau: float, trials: int) -> int:
    return math.ceil(round(tau * trials, 9))


def tpr_fpr(p: float, m: int, l: int, tau: float) -> tuple[float, float]:
    """Binomial tail probabilities of reaching tau*ml zero parities for bias p and for 1/2."""
    trials = int(m * l)
    if trials < 1:
        raise ValueError("need m*l >= 1")
    k = _threshold_count(tau, trials)
    return float(binom.sf(k - 1, trials, p)), float(binom.sf(k - 1, trials, 0.5))


def recover_duals(
    pk: PublicKey,
    t: int,
    r: int,
    config: MitmConfig,
    seed=None,
    max_list_size: int = 1 << 24,
    workers: int = 1,
) -> tuple[RecoveredDual, MitmConfig, int]:
    """Build lists and join, doubling the caps while nothing is found.

    Returns the verified duals, the config that produced them and the number
    of rounds used.
    """
    rng = make_rng(seed)
    G = pk.G
    cfg = config
    rounds = 0
    while True:
        rounds += 1
        l1, l2 = build_half_lists(G, t, cfg, rng)
        dual = merge_join(l1, l2, G.rows, workers)
        ok = verify_duals(G, dual, t)
        if not ok.all():
            raise AssertionError("merge-join emitted a vector outside the dual")
        full = cfg.alpha >= 1 and cfg.beta >= 1
        if len(dual) or full or max(cfg.list_cap_1, cfg.list_cap_2) * 2 > max_list_size:
            return dual, cfg, rounds
        cfg = cfg.scaled(2, G.rows, t)


def run_attack1(
    pk: PublicKey,
    targets,
    t: int,
    r: int,
    config: MitmConfig,
    seed=None,
    workers: int = 1,
) -> AttackReport:
    """Recover duals from pk and test the targets; FAILURE when no dual is found."""
    with Stopwatch() as sw:
        dual, cfg, rounds = recover_duals(pk, t, r, config, seed, workers=workers)
        verdict = distinguish(dual, pk.z, targets, cfg.tau) if len(dual) else None
    X = targets if isinstance(targets, np.ndarray) else codewords_to_rows(targets)
    report = AttackReport(
        attack="attack1",
        status=SUCCESS if verdict is not None else FAILURE,
        seed=seed if isinstance(seed, int) else None,
        params={"n": pk.n, "g": pk.G.cols, "t": t, "r": r, "l": cfg.l, "tau": cfg.tau},
        counters={
            "list_cap_1": cfg.list_cap_1,
            "list_cap_2": cfg.list_cap_2,
            "rounds": rounds,
            "recovered": len(dual),
            "targets": int(np.atleast_2d(X).shape[0]),
        },
        details={
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "expected_recovered": expected_recovered_rows(pk.n, r, t, cfg),
            "supports": dual.supports.tolist(),
        },
        wall_time=sw.elapsed,
    )
    if verdict is None:
        report.failure_reason = "no weight-t dual vector found within the list budget"
    else:
        report.statistic = verdict.ratio
        report.threshold = verdict.threshold
        report.verdict = verdict.verdict
        report.counters.update(n_zero=verdict.n_zero, n_tot=verdict.n_tot)
    return report
