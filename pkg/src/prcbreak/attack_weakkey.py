"""Weak public keys: duplicated rows of G leak a parity-2 check.

When rows a and b of G are equal, positions a and b of Gs always agree, so
after removing the public pad the bits of a codeword agree with
probability (1-w)^2 + w^2 at noise rate w, against 1/2 for random strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complexity import weak_key_prob_gim, weak_key_prob_llm
from .gf2 import BitMatrix, BitVector
from .report import AttackReport, DistinguisherVerdict, FAILURE, SUCCESS, Stopwatch
from .scheme import PublicKey, codewords_to_rows

__all__ = [
    "DuplicatePairs",
    "NoWeakKeyFound",
    "default_tau",
    "distinguish_by_pairs",
    "equality_rate",
    "find_duplicate_rows",
    "multi_target_scan",
    "run_attack2",
    "weak_key_prob_gim",
    "weak_key_prob_llm",
]


class NoWeakKeyFound(LookupError):
    pass


@dataclass(frozen=True)
class DuplicatePairs:
    """0-based (alpha, beta) row pairs with equal rows; each class pairs its first row with the rest."""

    pairs: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.pairs)

    def __bool__(self) -> bool:
        return bool(self.pairs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)


def default_tau(t: int) -> float:
    return 0.60 if t <= 3 else 0.65


def find_duplicate_rows(G: BitMatrix) -> DuplicatePairs:
    first: dict[bytes, int] = {}
    pairs = []
    for i, row in enumerate(G.words):
        key = row.tobytes()
        j = first.setdefault(key, i)
        if j != i:
            pairs.append((j, i))
    return DuplicatePairs(tuple(pairs))


def multi_target_scan(keys: list[PublicKey]) -> tuple[int, DuplicatePairs]:
    """Index of the first key with duplicated rows, and its pairs."""
    if not keys:
        raise ValueError("empty key list")
    for i, pk in enumerate(keys):
        d = find_duplicate_rows(pk.G)
        if d:
            return i, d
    raise NoWeakKeyFound(f"none of {len(keys)} keys has duplicated rows")


def equality_rate(rho: float) -> float:
    return rho**2 + (1 - rho) ** 2


def distinguish_by_pairs(pairs: DuplicatePairs, z: BitVector, targets, tau: float) -> DistinguisherVerdict:
    """Share of (pair, target) combinations whose two positions agree in x + z."""
    if not pairs:
        raise ValueError("no duplicate pairs")
    X = targets if isinstance(targets, np.ndarray) else codewords_to_rows(targets)
    X = np.atleast_2d(X) ^ z.to_bits()[None, :]
    idx = pairs.as_array()
    eq = X[:, idx[:, 0]] == X[:, idx[:, 1]]
    return DistinguisherVerdict(int(eq.sum()), int(eq.size), tau)


def run_attack2(keys: list[PublicKey], targets, tau: float, seed=None) -> AttackReport:
    """Scan for a weak key, then test ``targets`` against it (targets belong to that key)."""
    with Stopwatch() as sw:
        try:
            idx, pairs = multi_target_scan(keys)
        except NoWeakKeyFound as exc:
            idx, pairs, reason = None, DuplicatePairs(), str(exc)
        verdict = None
        if pairs:
            tg = targets[idx] if isinstance(targets, dict) else targets
            verdict = distinguish_by_pairs(pairs, keys[idx].z, tg, tau)
    report = AttackReport(
        attack="attack2",
        status=SUCCESS if verdict is not None else FAILURE,
        seed=seed if isinstance(seed, int) else None,
        params={"keys": len(keys), "n": keys[0].n, "tau": tau},
        counters={"weak_key_index": idx, "pairs": len(pairs)},
        details={"pairs": [list(p) for p in pairs.pairs]},
        wall_time=sw.elapsed,
    )
    if verdict is None:
        report.failure_reason = reason
    else:
        report.statistic = verdict.ratio
        report.threshold = tau
        report.verdict = verdict.verdict
        report.counters.update(n_zero=verdict.n_zero, n_tot=verdict.n_tot)
    return report


def expected_batch_size(p_weak: float) -> float:
    return math.inf if p_weak <= 0 else 1 / p_weak
