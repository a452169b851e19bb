"""CSR container, generator validation, and jump-chain decomposition."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import random_signed_generator, signed3_matrix, sym3_matrix
from fracwalk.errors import ValidationError
from fracwalk.sparse import (
    SparseMatrix,
    decompose,
    reconstruct_offdiagonal,
    transpose,
    validate_generator,
)

# -- strategies ---------------------------------------------------------


@st.composite
def dense_matrices(draw, max_n=6):
    n_rows = draw(st.integers(1, max_n))
    n_cols = draw(st.integers(1, max_n))
    vals = draw(
        st.lists(
            st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
            min_size=n_rows * n_cols,
            max_size=n_rows * n_cols,
        )
    )
    return np.array(vals).reshape(n_rows, n_cols)


@st.composite
def generator_matrices(draw):
    """Dense generators accepted by decompose without flags."""
    n = draw(st.integers(2, 7))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_signed_generator(np.random.default_rng(seed), n)


# -- SparseMatrix container ---------------------------------------------


class TestSparseMatrix:
    def test_dense_round_trip_hand_case(self):
        dense = np.array([[0.0, 1.5], [-2.0, 0.0]])
        A = SparseMatrix.from_dense(dense)
        assert A.shape == (2, 2)
        assert A.nnz == 2
        np.testing.assert_array_equal(A.to_dense(), dense)

    @given(dense_matrices())
    def test_dense_round_trip(self, dense):
        np.testing.assert_array_equal(SparseMatrix.from_dense(dense).to_dense(), dense)

    def test_from_coo_sorts_and_drops_zeros(self):
        A = SparseMatrix.from_coo(2, 3, [1, 0, 0], [2, 1, 0], [4.0, 0.0, 3.0])
        assert A.nnz == 2
        cols, vals = A.row(0)
        np.testing.assert_array_equal(cols, [0])
        np.testing.assert_array_equal(vals, [3.0])
        cols, vals = A.row(1)
        np.testing.assert_array_equal(cols, [2])
        np.testing.assert_array_equal(vals, [4.0])

    def test_from_coo_rejects_duplicates(self):
        with pytest.raises(ValidationError, match="duplicate"):
            SparseMatrix.from_coo(2, 2, [0, 0], [1, 1], [1.0, 2.0])

    def test_from_coo_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            SparseMatrix.from_coo(2, 2, [0], [2], [1.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValidationError):
            SparseMatrix.from_dense([[np.inf, 0.0], [0.0, 0.0]])

    def test_arrays_are_locked(self):
        A = sym3_matrix()
        with pytest.raises(ValueError):
            A.values[0] = 99.0
        with pytest.raises(ValueError):
            A.col_indices[0] = 2

    def test_diagonal(self):
        np.testing.assert_array_equal(sym3_matrix().diagonal(), [-2.0, -2.0, -2.0])
        rect = SparseMatrix.from_dense([[1.0, 2.0, 0.0], [0.0, 3.0, 4.0]])
        np.testing.assert_array_equal(rect.diagonal(), [1.0, 3.0])


# -- validate_generator -------------------------------------------------


class TestValidateGenerator:
    def test_clean_generator(self):
        rep = validate_generator(SparseMatrix.from_dense([[-2.0, 1.0], [1.0, -2.0]]))
        assert rep.ok
        assert rep.bad_diagonal_rows == ()
        assert rep.zero_diagonal_rows == ()
        assert rep.absorbing_rows == ()

    def test_zero_diagonal_listed_but_ok(self):
        # a zero-rate row is legal; the report lists it and decompose decides
        rep = validate_generator(SparseMatrix.from_dense([[0.0, 1.0], [1.0, -2.0]]))
        assert rep.ok
        assert rep.zero_diagonal_rows == (0,)
        assert 0 in rep.absorbing_rows

    def test_positive_diagonal_fails(self):
        rep = validate_generator(SparseMatrix.from_dense([[1.0, 1.0], [1.0, -2.0]]))
        assert not rep.ok
        assert rep.bad_diagonal_rows == (0,)

    def test_requires_square(self):
        with pytest.raises(ValidationError, match="square"):
            validate_generator(SparseMatrix.from_dense([[1.0, 2.0, 3.0]]))


# -- decompose ----------------------------------------------------------


class TestDecompose:
    def test_symmetric_hand_values(self):
        k = decompose(sym3_matrix())
        np.testing.assert_array_equal(k.d, [-2.0, -2.0, -2.0])
        np.testing.assert_array_equal(k.w, [1.0, 1.0, 1.0])
        np.testing.assert_array_equal(k.jump_signs, np.ones(6))
        for i in range(3):
            lo, hi = k.row_ptr[i], k.row_ptr[i + 1]
            np.testing.assert_array_equal(k.row_cum[lo:hi], [0.5, 1.0])
        assert not k.absorbing.any()

    def test_signed_hand_values(self):
        k = decompose(signed3_matrix())
        np.testing.assert_array_equal(k.d, [-4.0, -3.0, -2.0])
        np.testing.assert_allclose(k.w, [1.0, 1.0 / 3.0, 0.5], rtol=1e-15)
        # row 0: destinations 1 (+2) and 2 (-2), equal halves
        np.testing.assert_array_equal(k.row_cum[0:2], [0.5, 1.0])
        np.testing.assert_array_equal(k.jump_signs[0:2], [1.0, -1.0])
        # rows 1 and 2: single destination each
        np.testing.assert_array_equal(k.row_cum[2:4], [1.0, 1.0])
        np.testing.assert_array_equal(k.jump_signs[2:4], [1.0, 1.0])

    def test_diagonal_needs_absorbing_flag(self):
        A = SparseMatrix.from_dense([[-1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(ValidationError, match="absorbing"):
            decompose(A)
        k = decompose(A, allow_absorbing=True)
        assert k.absorbing.all()
        np.testing.assert_array_equal(k.w, [0.0, 0.0])

    def test_positive_diagonal_rejected(self):
        with pytest.raises(ValidationError, match="diagonal"):
            decompose(SparseMatrix.from_dense([[1.0, 1.0], [1.0, -2.0]]))

    def test_cumulative_ends_exactly_at_one(self):
        rng = np.random.default_rng(5)
        for n in (2, 5, 9):
            k = decompose(SparseMatrix.from_dense(random_signed_generator(rng, n)))
            last = k.row_cum[k.row_ptr[1:] - 1]
            np.testing.assert_array_equal(last, np.ones(n))

    @given(generator_matrices(), st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_scaling_covariance(self, dense, c):
        # scaling A by c > 0 rescales rates but leaves the chain alone
        k1 = decompose(SparseMatrix.from_dense(dense))
        k2 = decompose(SparseMatrix.from_dense(c * dense))
        np.testing.assert_allclose(k2.d, c * k1.d, rtol=1e-14)
        np.testing.assert_allclose(k2.w, k1.w, rtol=1e-12)
        np.testing.assert_array_equal(k2.jump_cols, k1.jump_cols)
        np.testing.assert_array_equal(k2.jump_signs, k1.jump_signs)
        np.testing.assert_allclose(k2.row_cum, k1.row_cum, rtol=1e-14)


# -- reconstruct_offdiagonal --------------------------------------------


def _offdiag(dense):
    out = np.array(dense, dtype=float, copy=True)
    np.fill_diagonal(out, 0.0)
    return out


class TestReconstruct:
    def test_symmetric_exact(self):
        A = sym3_matrix()
        R = reconstruct_offdiagonal(decompose(A))
        np.testing.assert_array_equal(R.to_dense(), _offdiag(A.to_dense()))

    def test_zero_offdiagonal_gives_empty(self):
        k = decompose(
            SparseMatrix.from_dense([[-1.0, 0.0], [0.0, -2.0]]), allow_absorbing=True
        )
        assert reconstruct_offdiagonal(k).nnz == 0

    def test_diffusion_round_trip(self, diffusion8):
        A = diffusion8.A
        R = reconstruct_offdiagonal(decompose(A))
        np.testing.assert_allclose(R.to_dense(), _offdiag(A.to_dense()), rtol=1e-14)

    @given(generator_matrices())
    @settings(max_examples=50, deadline=None)
    def test_random_round_trip(self, dense):
        R = reconstruct_offdiagonal(decompose(SparseMatrix.from_dense(dense)))
        np.testing.assert_allclose(
            R.to_dense(), _offdiag(dense), rtol=1e-13, atol=1e-18
        )


# -- transpose ----------------------------------------------------------


class TestTranspose:
    def test_hand_case(self):
        A = SparseMatrix.from_dense([[-1.0, 2.0], [0.0, -3.0]])
        np.testing.assert_array_equal(
            transpose(A).to_dense(), [[-1.0, 0.0], [2.0, -3.0]]
        )

    def test_symmetric_fixed_point(self):
        A = sym3_matrix()
        T = transpose(A)
        np.testing.assert_array_equal(T.row_offsets, A.row_offsets)
        np.testing.assert_array_equal(T.col_indices, A.col_indices)
        np.testing.assert_array_equal(T.values, A.values)

    def test_involution_5x5(self, rng):
        dense = np.where(rng.random((5, 5)) < 0.4, rng.normal(size=(5, 5)), 0.0)
        A = SparseMatrix.from_dense(dense)
        np.testing.assert_array_equal(transpose(transpose(A)).to_dense(), dense)

    @given(dense_matrices())
    def test_involution(self, dense):
        A = SparseMatrix.from_dense(dense)
        B = transpose(transpose(A))
        np.testing.assert_array_equal(B.to_dense(), dense)
        np.testing.assert_array_equal(transpose(A).to_dense(), dense.T)
