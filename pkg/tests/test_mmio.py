"""Matrix Market and vector file round trips, with line-numbered errors."""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracwalk.errors import MatrixMarketError
from fracwalk.mmio import (
    read_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)
from fracwalk.sparse import SparseMatrix


def _write(tmp_path, text, name="m.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- reading ------------------------------------------------------------


class TestReadMatrix:
    def test_two_state_general(self, tmp_path):
        p = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate real general\n"
            "2 2 4\n"
            "1 1 -1.0\n1 2 1.0\n2 1 1.0\n2 2 -1.0\n",
        )
        A = read_matrix_market(p)
        np.testing.assert_array_equal(A.to_dense(), [[-1.0, 1.0], [1.0, -1.0]])

    def test_symmetric_lower_triangle_expands(self, tmp_path):
        p = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate real symmetric\n"
            "% lower triangle only\n"
            "3 3 6\n"
            "1 1 -2.0\n2 1 1.0\n2 2 -2.0\n3 1 1.0\n3 2 1.0\n3 3 -2.0\n",
        )
        A = read_matrix_market(p)
        np.testing.assert_array_equal(
            A.to_dense(),
            [[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, -2.0]],
        )

    def test_comments_and_blanks_skipped(self, tmp_path):
        p = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate real general\n"
            "% a comment\n\n"
            "2 2 1\n"
            "% another\n"
            "2 1 3.5\n",
        )
        A = read_matrix_market(p)
        np.testing.assert_array_equal(A.to_dense(), [[0.0, 0.0], [3.5, 0.0]])

    @pytest.mark.parametrize(
        "text, lineno, match",
        [
            ("nonsense\n2 2 0\n", 1, "banner"),
            ("%%MatrixMarket matrix coordinate complex general\n1 1 0\n", 1, "header"),
            ("%%MatrixMarket matrix coordinate real\n1 1 0\n", 1, "symmetry"),
            ("%%MatrixMarket matrix coordinate real skew\n1 1 0\n", 1, "symmetry"),
            ("%%MatrixMarket matrix coordinate real general\n2 2\n", 2, "size"),
            (
                "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 3 1.0\n",
                3,
                "column",
            ),
            (
                "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n",
                3,
                "row",
            ),
            (
                "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n",
                3,
                "value",
            ),
            (
                "%%MatrixMarket matrix coordinate real general\n"
                "2 2 2\n1 1 1.0\n1 1 2.0\n",
                4,
                "duplicate",
            ),
            (
                "%%MatrixMarket matrix coordinate real general\n"
                "2 2 1\n1 1 1.0\n2 2 1.0\n",
                4,
                "declared",
            ),
            (
                "%%MatrixMarket matrix coordinate real symmetric\n"
                "2 2 2\n1 2 1.0\n2 1 1.0\n",
                4,
                "duplicate",
            ),
        ],
    )
    def test_errors_carry_line_numbers(self, tmp_path, text, lineno, match):
        with pytest.raises(MatrixMarketError, match=match) as exc:
            read_matrix_market(_write(tmp_path, text))
        assert exc.value.line == lineno

    def test_too_few_entries(self, tmp_path):
        p = _write(
            tmp_path,
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
        )
        with pytest.raises(MatrixMarketError, match="expected 2 entries"):
            read_matrix_market(p)


# -- writing ------------------------------------------------------------


class TestWriteMatrix:
    def test_diffusion_round_trip_bitwise(self, tmp_path, diffusion16):
        p = tmp_path / "d16.mtx"
        write_matrix_market(diffusion16.A, p)
        B = read_matrix_market(p)
        np.testing.assert_array_equal(B.row_offsets, diffusion16.A.row_offsets)
        np.testing.assert_array_equal(B.col_indices, diffusion16.A.col_indices)
        np.testing.assert_array_equal(B.values, diffusion16.A.values)

    @given(
        st.integers(1, 5),
        st.integers(1, 5),
        st.lists(
            st.tuples(
                st.integers(0, 4),
                st.integers(0, 4),
                st.floats(
                    allow_nan=False,
                    allow_infinity=False,
                    min_value=-1e30,
                    max_value=1e30,
                ).filter(lambda v: v != 0.0),
            ),
            max_size=12,
        ),
    )
    @settings(max_examples=60, deadline=None)
    def test_random_round_trip_bitwise(self, n_rows, n_cols, entries):
        seen = set()
        rows, cols, vals = [], [], []
        for i, j, v in entries:
            if i < n_rows and j < n_cols and (i, j) not in seen:
                seen.add((i, j))
                rows.append(i)
                cols.append(j)
                vals.append(v)
        A = SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "r.mtx"
            write_matrix_market(A, p)
            B = read_matrix_market(p)
        np.testing.assert_array_equal(B.to_dense(), A.to_dense())


# -- vectors ------------------------------------------------------------


class TestVectors:
    def test_plain_with_comments(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("# heading\n1.5\n\n% mid comment\n-2.0\n0.0\n")
        np.testing.assert_array_equal(read_vector(p), [1.5, -2.0, 0.0])

    def test_matrix_market_array_form(self, tmp_path):
        p = tmp_path / "v.mtx"
        p.write_text("%%MatrixMarket matrix array real general\n3 1\n1.0\n2.5\n-3.0\n")
        np.testing.assert_array_equal(read_vector(p), [1.0, 2.5, -3.0])

    def test_array_form_must_be_single_column(self, tmp_path):
        p = tmp_path / "v.mtx"
        p.write_text("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
        with pytest.raises(MatrixMarketError):
            read_vector(p)

    def test_bad_value_line_numbered(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("1.0\nxyz\n")
        with pytest.raises(MatrixMarketError) as exc:
            read_vector(p)
        assert exc.value.line == 2

    @given(
        st.lists(
            st.floats(
                allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300
            ),
            min_size=1,
            max_size=16,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_bitwise(self, vals):
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "v.txt"
            write_vector(np.array(vals), p)
            got = read_vector(p)
        np.testing.assert_array_equal(got, np.array(vals))
