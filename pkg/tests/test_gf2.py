import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prcbreak.gf2 import (
    BitMatrix,
    BitVector,
    ColumnPermutation,
    SparseRowMatrix,
    mat_mul,
    mat_vec_mul,
    nullspace_basis,
    pack_bits,
    rref,
    sparse_mat_mul,
    sparse_mat_vec_mul,
    span_elements,
    systematic_form,
    unpack_bits,
)


def schoolbook(M, v):
    """Per-bit double loop, independent of the packed code path."""
    out = []
    for i in range(M.shape[0]):
        acc = 0
        for j in range(M.shape[1]):
            acc ^= int(M[i, j]) & int(v[j])
        out.append(acc)
    return np.array(out, dtype=np.uint8)


def gf2_rank(M):
    """Rank by elimination on Python ints, one int per row."""
    rows = [int("".join(map(str, r[::-1])) or "0", 2) for r in M.tolist()]
    rank = 0
    for bit in range(M.shape[1]):
        piv = next((i for i in range(rank, len(rows)) if rows[i] >> bit & 1), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] >> bit & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


bit_matrices = st.integers(1, 12).flatmap(
    lambda r: st.integers(1, 16).flatmap(
        lambda c: st.lists(st.lists(st.integers(0, 1), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


# BitVector

def test_canonical_tail_is_zero():
    v = BitVector.from_bits([1] * 70)
    assert v.words[-1] == (1 << 6) - 1
    with pytest.raises(ValueError):
        BitVector(3, np.array([0b1000], dtype=np.uint64))


@given(st.lists(st.integers(0, 1), max_size=300))
def test_pack_roundtrip_and_weight(bits):
    v = BitVector.from_bits(bits)
    assert v.to_bits().tolist() == bits
    assert v.weight() == sum(bits)
    assert [v[i] for i in range(len(bits))] == bits


@given(st.integers(1, 200), st.data())
def test_dot_and_add_match_bits(n, data):
    a = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    b = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    va, vb = BitVector.from_bits(a), BitVector.from_bits(b)
    assert va.dot(vb) == sum(x & y for x, y in zip(a, b)) % 2
    assert (va + vb).to_bits().tolist() == [x ^ y for x, y in zip(a, b)]


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        BitVector.zeros(3) + BitVector.zeros(4)
    with pytest.raises(ValueError):
        mat_vec_mul(BitMatrix.identity(3), BitVector.zeros(4))
    with pytest.raises(ValueError):
        sparse_mat_vec_mul(SparseRowMatrix(3, [[0]]), BitVector.zeros(4))


def test_pack_bits_multirow():
    bits = np.random.default_rng(1).integers(0, 2, size=(5, 130), dtype=np.uint8)
    assert np.array_equal(unpack_bits(pack_bits(bits), 130), bits)


# products

def test_identity_times_vector():
    assert mat_vec_mul(BitMatrix.identity(3), BitVector.from_bits([1, 0, 1])) == BitVector.from_bits([1, 0, 1])


def test_zero_matrix_times_vector():
    v = BitVector.from_bits([1, 1, 0, 1, 1])
    assert mat_vec_mul(BitMatrix.zeros(4, 5), v) == BitVector.zeros(4)


def test_mat_vec_mul_against_schoolbook(rng):
    M = rng.integers(0, 2, size=(8, 8), dtype=np.uint8)
    v = rng.integers(0, 2, size=8, dtype=np.uint8)
    got = mat_vec_mul(BitMatrix.from_bits(M), BitVector.from_bits(v)).to_bits()
    assert np.array_equal(got, schoolbook(M, v))


@given(bit_matrices, st.data())
def test_mat_vec_mul_property(M, data):
    M = np.array(M, dtype=np.uint8)
    v = np.array(data.draw(st.lists(st.integers(0, 1), min_size=M.shape[1], max_size=M.shape[1])), dtype=np.uint8)
    assert np.array_equal(mat_vec_mul(BitMatrix.from_bits(M), BitVector.from_bits(v)).to_bits(), schoolbook(M, v))


def test_sparse_even_and_odd_parity():
    assert sparse_mat_vec_mul(SparseRowMatrix(4, [[0, 2]]), BitVector.from_bits([1, 0, 1, 0])).to_bits().tolist() == [0]
    assert sparse_mat_vec_mul(SparseRowMatrix(2, [[1]]), BitVector.from_bits([0, 1])).to_bits().tolist() == [1]


@settings(max_examples=60)
@given(st.integers(1, 150), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_sparse_matches_dense(cols, rows, seed):
    r = np.random.default_rng(seed)
    supports = [np.sort(r.choice(cols, size=r.integers(0, min(cols, 6) + 1), replace=False)) for _ in range(rows)]
    P = SparseRowMatrix(cols, supports)
    v = BitVector.random(cols, r)
    assert sparse_mat_vec_mul(P, v) == mat_vec_mul(P.to_dense(), v)
    X = r.integers(0, 2, size=(3, cols), dtype=np.uint8)
    assert np.array_equal(P.parities(X), np.stack([schoolbook(P.to_dense().to_bits(), x) for x in X]))


def test_sparse_mat_mul_matches_dense(rng):
    supports = rng.integers(0, 40, size=(15, 3))
    supports = np.array([np.unique(s) for s in supports], dtype=object)
    P = SparseRowMatrix(40, list(supports) + [[]])
    M = BitMatrix.random(40, 9, rng)
    assert sparse_mat_mul(P, M) == mat_mul(P.to_dense(), M)


def test_sparse_rejects_unsorted_and_out_of_range():
    with pytest.raises(ValueError):
        SparseRowMatrix(4, [[2, 1]])
    with pytest.raises(ValueError):
        SparseRowMatrix(4, [[4]])


# elimination

def test_systematic_input_unchanged():
    M = BitMatrix.from_bits([[1, 0, 1, 1], [0, 1, 0, 1]])
    S, perm, rank = systematic_form(M)
    assert S == M and perm.is_identity() and rank == 2


def test_zero_matrix_rank_zero():
    _, _, rank = systematic_form(BitMatrix.zeros(2, 4))
    assert rank == 0


def test_empty_matrix_rejected():
    with pytest.raises(ValueError):
        systematic_form(BitMatrix.zeros(0, 3))


def test_random_6x10_nullspace_multiplies_back(rng):
    M = BitMatrix.random(6, 10, rng)
    S, perm, rank = systematic_form(M)
    assert np.array_equal(S.to_bits()[:rank, :rank], np.eye(rank, dtype=np.uint8))
    assert not S.to_bits()[rank:].any()
    N = nullspace_basis(M)
    assert mat_mul(M, N).is_zero()
    assert N.cols == 10 - rank


def test_nullspace_of_all_ones_row():
    N = nullspace_basis(BitMatrix.from_bits([[1, 1]]))
    assert N.to_bits().T.tolist() == [[1, 1]]


def test_nullspace_full_column_rank_is_empty():
    assert nullspace_basis(BitMatrix.identity(5)).cols == 0


def test_nullspace_20x8_exhaustive(rng):
    M = BitMatrix.random(20, 8, rng)
    N = nullspace_basis(M)
    assert N.cols == 8 - gf2_rank(M.to_bits())
    brute = {v for v in itertools.product([0, 1], repeat=8)
             if not schoolbook(M.to_bits(), np.array(v, dtype=np.uint8)).any()}
    assert len(brute) == 2 ** N.cols
    assert span_elements(N.transpose()) == {BitVector.from_bits(v).words.tobytes() for v in brute}


@settings(max_examples=80)
@given(bit_matrices)
def test_systematic_form_preserves_row_space(M):
    M = BitMatrix.from_bits(np.array(M, dtype=np.uint8))
    S, perm, rank = systematic_form(M)
    assert rank == gf2_rank(M.to_bits())
    undone = perm.inverse().apply_matrix(S)
    assert span_elements(undone) == span_elements(M)


def test_rank_plus_nullity_200_seeds():
    for seed in range(200):
        r = np.random.default_rng(seed)
        rows, cols = int(r.integers(1, 30)), int(r.integers(1, 30))
        M = BitMatrix.from_bits((r.random((rows, cols)) < r.uniform(0.1, 0.9)).astype(np.uint8))
        assert M.rank() + nullspace_basis(M).cols == cols
        assert M.rank() == gf2_rank(M.to_bits()) <= min(rows, cols)


def test_rref_pivots_are_unit_columns(rng):
    M = BitMatrix.random(7, 12, rng)
    R, piv = rref(M)
    bits = R.to_bits()
    for i, c in enumerate(piv):
        assert bits[:, c].tolist() == [int(j == i) for j in range(7)]


@given(st.permutations(list(range(9))), st.integers(0, 2**32 - 1))
def test_permutation_then_inverse_is_identity(order, seed):
    perm = ColumnPermutation(np.array(order))
    r = np.random.default_rng(seed)
    M, v = BitMatrix.random(4, 9, r), BitVector.random(9, r)
    assert perm.inverse().apply_matrix(perm.apply_matrix(M)) == M
    assert perm.inverse().apply_vector(perm.apply_vector(v)) == v


def test_transpose_involution(rng):
    M = BitMatrix.random(70, 130, rng)
    assert M.T.T == M
    assert np.array_equal(M.T.to_bits(), M.to_bits().T)
