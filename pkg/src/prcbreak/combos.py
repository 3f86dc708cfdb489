"""Enumeration and uniform sampling of k-subsets of range(size)."""

from __future__ import annotations

import itertools
import math

import numpy as np

ENUMERATE_LIMIT = 4_000_000


def all_combinations(size: int, k: int) -> np.ndarray:
    """Every sorted k-subset, in lexicographic order, as a (C(size,k), k) array."""
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if k == 1:
        return np.arange(size, dtype=np.int64)[:, None]
    if k == 2:
        a, b = np.triu_indices(size, 1)
        return np.stack([a, b], axis=1).astype(np.int64)
    return np.array(list(itertools.combinations(range(size), k)), dtype=np.int64).reshape(-1, k)


def _decode(code: np.ndarray, size: int, k: int) -> np.ndarray:
    out = np.empty((code.size, k), dtype=np.int64)
    for j in range(k - 1, -1, -1):
        out[:, j] = code % size
        code = code // size
    return out


def sample_combinations(size: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` distinct sorted k-subsets, uniform without replacement, in lexicographic order."""
    total = math.comb(size, k)
    if count > total:
        raise ValueError(f"requested {count} subsets but only {total} exist")
    if count == total or total <= ENUMERATE_LIMIT:
        combos = all_combinations(size, k)
        if count == total:
            return combos
        return combos[np.sort(rng.choice(total, size=count, replace=False))]
    if k * math.log2(size) > 62:
        raise ValueError("subset codes overflow 64 bits")
    codes = np.zeros(0, dtype=np.int64)
    while codes.size < count:
        need = count - codes.size
        cols = _sorted_columns(rng.integers(0, size, size=(k, need + need // 8 + 16)))
        ok = np.ones(cols[0].size, dtype=bool)
        for a, b in zip(cols, cols[1:]):
            ok &= a < b
        code = np.zeros(int(ok.sum()), dtype=np.int64)
        for c in cols:
            code = code * size + c[ok]
        codes = np.union1d(codes, code)
    if codes.size > count:
        drop = rng.choice(codes.size, size=codes.size - count, replace=False)
        keep = np.ones(codes.size, dtype=bool)
        keep[drop] = False
        codes = codes[keep]
    return _decode(codes, size, k)


def _sorted_columns(draw: np.ndarray) -> list[np.ndarray]:
    """Sort k parallel columns elementwise with a min/max bubble network."""
    cols = list(draw)
    for i in range(len(cols)):
        for j in range(len(cols) - 1 - i):
            lo = np.minimum(cols[j], cols[j + 1])
            cols[j + 1] = np.maximum(cols[j], cols[j + 1])
            cols[j] = lo
    return cols
