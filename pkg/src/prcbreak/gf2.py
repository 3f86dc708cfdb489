"""Bit-packed linear algebra over GF(2).

Vectors and matrices are stored as little-endian ``uint64`` words, row-major,
least-significant bit first within each word.  Bits past the logical length
of a row are always zero, so word-level comparisons and popcounts are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64


def n_words(nbits: int) -> int:
    return (nbits + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., nbits) array of 0/1 values into (..., n_words) uint64."""
    bits = np.asarray(bits, dtype=np.uint8)
    nbits = bits.shape[-1]
    nw = n_words(nbits)
    pad = nw * WORD_BITS - nbits
    if pad:
        widths = [(0, 0)] * (bits.ndim - 1) + [(0, pad)]
        bits = np.pad(bits, widths)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns uint8 0/1 values."""
    words = np.ascontiguousarray(words, dtype="<u8")
    raw = words.view(np.uint8)
    return np.unpackbits(raw, axis=-1, bitorder="little")[..., :nbits]


def _tail_mask(nbits: int) -> np.uint64:
    rem = nbits % WORD_BITS
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def _parity(words: np.ndarray, axis: int = -1) -> np.ndarray:
    return (np.bitwise_count(words).sum(axis=axis, dtype=np.int64) & 1).astype(np.uint8)


class BitVector:
    """Immutable packed vector over GF(2)."""

    __slots__ = ("length", "words")

    def __init__(self, length: int, words: np.ndarray):
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (n_words(length),):
            raise ValueError(f"expected {n_words(length)} words for length {length}, got {words.shape}")
        if length and words[-1] & ~_tail_mask(length):
            raise ValueError("bits set beyond vector length")
        words = words.copy()
        words.setflags(write=False)
        self.length = int(length)
        self.words = words

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length, np.zeros(n_words(length), dtype=np.uint64))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(arr.size, pack_bits(arr))

    @classmethod
    def from_support(cls, length: int, support: Iterable[int]) -> "BitVector":
        bits = np.zeros(length, dtype=np.uint8)
        idx = np.asarray(list(support), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= length):
            raise IndexError("support index out of range")
        bits[idx] = 1
        return cls.from_bits(bits)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitVector":
        return cls.from_bits(rng.integers(0, 2, size=length, dtype=np.uint8))

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.length)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.to_bits())

    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def dot(self, other: "BitVector") -> int:
        _check_len(self.length, other.length)
        return int(_parity(self.words & other.words))

    def __add__(self, other: "BitVector") -> "BitVector":
        _check_len(self.length, other.length)
        return BitVector(self.length, self.words ^ other.words)

    __xor__ = __add__

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return int((self.words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length == other.length and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.length, self.words.tobytes()))

    def __repr__(self) -> str:
        if self.length <= 64:
            return f"BitVector({''.join(map(str, self.to_bits()))})"
        return f"BitVector(length={self.length}, weight={self.weight()})"


def _check_len(a: int, b: int) -> None:
    if a != b:
        raise ValueError(f"dimension mismatch: {a} != {b}")


class BitMatrix:
    """Immutable packed matrix over GF(2); ``words`` has shape (rows, n_words(cols))."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (rows, n_words(cols)):
            raise ValueError(f"expected word shape {(rows, n_words(cols))}, got {words.shape}")
        if rows and cols and (words[:, -1] & ~_tail_mask(cols)).any():
            raise ValueError("bits set beyond column count")
        words = np.ascontiguousarray(words).copy()
        words.setflags(write=False)
        self.rows = int(rows)
        self.cols = int(cols)
        self.words = words

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, n_words(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_bits(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_bits(cls, bits) -> "BitMatrix":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("bits must be two-dimensional")
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(arr.shape[0], arr.shape[1], pack_bits(arr))

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector]) -> "BitMatrix":
        if not rows:
            raise ValueError("need at least one row")
        cols = rows[0].length
        for r in rows:
            _check_len(cols, r.length)
        return cls(len(rows), cols, np.stack([r.words for r in rows]))

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls.from_bits(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.cols)

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.words[i])

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_bits(self.to_bits().T)

    @property
    def T(self) -> "BitMatrix":
        return self.transpose()

    def rank(self) -> int:
        return _eliminate(self.words.copy(), self.cols)[1].size

    def is_zero(self) -> bool:
        return not self.words.any()

    def __matmul__(self, other):
        if isinstance(other, BitVector):
            return mat_vec_mul(self, other)
        if isinstance(other, BitMatrix):
            return mat_mul(self, other)
        return NotImplemented

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


class SparseRowMatrix:
    """Row-sparse matrix; each row is a strictly increasing list of column indices.

    Stored CSR-style as ``indptr``/``indices`` so per-row parities reduce to a
    single gather plus a cumulative sum.
    """

    __slots__ = ("rows", "cols", "indptr", "indices")

    def __init__(self, cols: int, row_supports: Iterable[Sequence[int]]):
        supports = [np.asarray(s, dtype=np.int64) for s in row_supports]
        for s in supports:
            if s.size and (s.min() < 0 or s.max() >= cols):
                raise ValueError("row support index out of range")
            if s.size > 1 and (np.diff(s) <= 0).any():
                raise ValueError("row supports must be strictly increasing")
        self.rows = len(supports)
        self.cols = int(cols)
        lengths = np.fromiter((s.size for s in supports), dtype=np.int64, count=self.rows)
        self.indptr = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        self.indices = np.concatenate(supports) if supports else np.zeros(0, dtype=np.int64)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @classmethod
    def from_array(cls, cols: int, supports: np.ndarray) -> "SparseRowMatrix":
        """Build from an (rows, w) array of indices; rows are sorted first."""
        return cls(cols, np.sort(np.asarray(supports, dtype=np.int64), axis=1))

    def row_support(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @property
    def row_supports(self) -> list[np.ndarray]:
        return [self.row_support(i) for i in range(self.rows)]

    def row_weights(self) -> np.ndarray:
        return np.diff(self.indptr)

    def uniform_weight(self) -> int | None:
        w = self.row_weights()
        return int(w[0]) if w.size and (w == w[0]).all() else None

    def support_array(self) -> np.ndarray:
        """(rows, t) index array; only valid when all rows share a weight."""
        t = self.uniform_weight()
        if t is None:
            raise ValueError("rows have differing weights")
        return self.indices.reshape(self.rows, t)

    def to_dense(self) -> BitMatrix:
        bits = np.zeros((self.rows, self.cols), dtype=np.uint8)
        row_ids = np.repeat(np.arange(self.rows), self.row_weights())
        bits[row_ids, self.indices] = 1
        return BitMatrix.from_bits(bits)

    def parities(self, bits: np.ndarray) -> np.ndarray:
        """Row parities against one or many unpacked bit vectors (..., cols)."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape[-1] != self.cols:
            raise ValueError(f"dimension mismatch: {bits.shape[-1]} != {self.cols}")
        if self.rows == 0:
            return np.zeros(bits.shape[:-1] + (0,), dtype=np.uint8)
        if self.uniform_weight():
            return np.bitwise_xor.reduce(bits[..., self.support_array()], axis=-1)
        gathered = bits[..., self.indices].astype(np.int64)
        csum = np.concatenate([np.zeros(bits.shape[:-1] + (1,), np.int64), np.cumsum(gathered, axis=-1)], axis=-1)
        sums = csum[..., self.indptr[1:]] - csum[..., self.indptr[:-1]]
        return (sums & 1).astype(np.uint8)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseRowMatrix):
            return NotImplemented
        return (
            self.cols == other.cols
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self) -> str:
        return f"SparseRowMatrix({self.rows}x{self.cols}, weight={self.uniform_weight()})"


@dataclass(frozen=True)
class ColumnPermutation:
    """Column ``j`` of the permuted matrix is column ``order[j]`` of the original."""

    order: np.ndarray

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(order.size)):
            raise ValueError("not a permutation")
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n: int) -> "ColumnPermutation":
        return cls(np.arange(n))

    def inverse(self) -> "ColumnPermutation":
        inv = np.empty_like(self.order)
        inv[self.order] = np.arange(self.order.size)
        return ColumnPermutation(inv)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.order, np.arange(self.order.size)))

    def apply_matrix(self, m: BitMatrix) -> BitMatrix:
        _check_len(m.cols, self.order.size)
        return BitMatrix.from_bits(m.to_bits()[:, self.order])

    def apply_vector(self, v: BitVector) -> BitVector:
        _check_len(v.length, self.order.size)
        return BitVector.from_bits(v.to_bits()[self.order])


def mat_vec_mul(m: BitMatrix, v: BitVector) -> BitVector:
    _check_len(m.cols, v.length)
    return BitVector.from_bits(_parity(m.words & v.words[None, :]))


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    _check_len(a.cols, b.rows)
    prod = a.to_bits().astype(np.float64) @ b.to_bits().astype(np.float64)
    return BitMatrix.from_bits((prod.astype(np.int64) & 1).astype(np.uint8))


def sparse_mat_vec_mul(p: SparseRowMatrix, v: BitVector) -> BitVector:
    _check_len(p.cols, v.length)
    return BitVector.from_bits(p.parities(v.to_bits()))


def sparse_mat_mul(p: SparseRowMatrix, m: BitMatrix) -> BitMatrix:
    """P @ M where each output row is the XOR of the M rows in P's row support."""
    _check_len(p.cols, m.rows)
    out = np.zeros((p.rows, m.words.shape[1]), dtype=np.uint64)
    if p.rows and p.indices.size:
        gathered = m.words[p.indices]
        nonempty = p.row_weights() > 0
        starts = p.indptr[:-1][nonempty]
        out[nonempty] = np.bitwise_xor.reduceat(gathered, starts, axis=0)
    return BitMatrix(p.rows, m.cols, out)


def _eliminate(words: np.ndarray, ncols: int, col_order=None, aug: np.ndarray | None = None):
    """In-place Gauss-Jordan elimination on packed rows.

    Columns are visited in ``col_order`` (default natural order).  ``aug``
    is an optional per-row bit array that receives the same row operations.
    Returns ``(words, pivot_cols)``; row ``i`` holds the pivot for
    ``pivot_cols[i]`` and every other row is zero in that column.
    """
    nrows = words.shape[0]
    order = range(ncols) if col_order is None else col_order
    pivots: list[int] = []
    rank = 0
    for c in order:
        if rank == nrows:
            break
        w, b = int(c) >> 6, np.uint64(int(c) & 63)
        col = (words[rank:, w] >> b) & np.uint64(1)
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        p = rank + int(hits[0])
        if p != rank:
            words[[rank, p]] = words[[p, rank]]
            if aug is not None:
                aug[[rank, p]] = aug[[p, rank]]
        mask = ((words[:, w] >> b) & np.uint64(1)).astype(bool)
        mask[rank] = False
        if mask.any():
            words[mask] ^= words[rank]
            if aug is not None:
                aug[mask] ^= aug[rank]
        pivots.append(int(c))
        rank += 1
    return words, np.asarray(pivots, dtype=np.int64)


def rref(m: BitMatrix) -> tuple[BitMatrix, np.ndarray]:
    """Reduced row echelon form and the pivot columns."""
    words, pivots = _eliminate(m.words.copy(), m.cols)
    return BitMatrix(m.rows, m.cols, words), pivots


def systematic_form(m: BitMatrix) -> tuple[BitMatrix, ColumnPermutation, int]:
    """Row-reduce ``m`` to ``[I_rank | R]`` after a column permutation.

    Pivot columns are moved to the front in the order found; the remaining
    columns keep their relative order.  Rows past ``rank`` are zero.
    """
    if m.rows == 0 or m.cols == 0:
        raise ValueError("matrix must be nonempty")
    reduced, pivots = rref(m)
    rest = np.setdiff1d(np.arange(m.cols), pivots, assume_unique=True)
    perm = ColumnPermutation(np.concatenate([pivots, rest]))
    return perm.apply_matrix(reduced), perm, int(pivots.size)


def nullspace_basis(m: BitMatrix) -> BitMatrix:
    """Columns of the result span {v : m v = 0}; shape (cols, cols - rank)."""
    if m.rows == 0 or m.cols == 0:
        raise ValueError("matrix must be nonempty")
    reduced, pivots = rref(m)
    rank = pivots.size
    free = np.setdiff1d(np.arange(m.cols), pivots, assume_unique=True)
    basis = np.zeros((m.cols, free.size), dtype=np.uint8)
    if free.size:
        basis[free, np.arange(free.size)] = 1
        if rank:
            basis[pivots] = reduced.to_bits()[:rank][:, free]
    return BitMatrix.from_bits(basis)


def span_elements(m: BitMatrix) -> set[bytes]:
    """Every vector in the row span of ``m`` (exhaustive; keep rows small)."""
    reduced, pivots = rref(m)
    basis = reduced.words[: pivots.size]
    out = {np.zeros(m.words.shape[1], dtype=np.uint64).tobytes()}
    for row in basis:
        out |= {(np.frombuffer(v, dtype=np.uint64) ^ row).tobytes() for v in out}
    return out
