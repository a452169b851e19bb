"""Sparse generator matrices and their jump-chain decomposition.

The solver consumes square matrices ``A`` whose diagonal is nonpositive and
whose off-diagonal entries may carry either sign.  ``decompose`` splits such
a matrix into the data a weighted random walk needs: per-state exit rates
``|a_ii|``, a jump distribution proportional to ``|a_ij|``, the signs of the
off-diagonal entries, and a per-state weight factor

    w_i = (sum_j |a_ij|, j != i) / |a_ii|

applied at every jump out of state ``i``.  With this convention the weight
attached to a path is a product of nonnegative ``w`` factors and ``+-1``
signs; no extra alternating sign per jump is needed (the two sign sources in
the underlying resolvent expansion cancel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "SparseMatrix",
    "ValidationReport",
    "ChainKernel",
    "validate_generator",
    "decompose",
    "reconstruct_offdiagonal",
    "transpose",
]

#: tolerance (in units in the last place) for the per-row cumulative
#: probability to land on 1.0 before it is pinned there exactly
_CUM_ULPS = 4


def _as_locked(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """CSR matrix with sorted, duplicate-free, explicitly nonzero rows.

    Instances are immutable: the index/value arrays are locked read-only at
    construction so a matrix can be shared across worker threads without
    defensive copies.  Use :meth:`from_coo` / :meth:`from_dense` rather than
    the raw constructor unless the arrays are already in canonical form.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray  # int64, length n_rows + 1
    col_indices: np.ndarray  # int64, length nnz
    values: np.ndarray  # float64, length nnz

    def __post_init__(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValidationError("matrix dimensions must be nonnegative")
        offs = _as_locked(self.row_offsets, np.int64)
        cols = _as_locked(self.col_indices, np.int64)
        vals = _as_locked(self.values, np.float64)
        object.__setattr__(self, "row_offsets", offs)
        object.__setattr__(self, "col_indices", cols)
        object.__setattr__(self, "values", vals)

        if offs.shape != (self.n_rows + 1,):
            raise ValidationError("row_offsets must have length n_rows + 1")
        if offs[0] != 0 or offs[-1] != cols.size or np.any(np.diff(offs) < 0):
            raise ValidationError("row_offsets must be nondecreasing from 0 to nnz")
        if cols.shape != vals.shape:
            raise ValidationError("col_indices and values must have equal length")
        if cols.size:
            if cols.min() < 0 or cols.max() >= self.n_cols:
                raise ValidationError("column index out of range")
            for i in range(self.n_rows):
                row = cols[offs[i] : offs[i + 1]]
                if row.size > 1 and np.any(np.diff(row) <= 0):
                    raise ValidationError(
                        f"row {i}: column indices must be strictly increasing"
                    )
        if not np.all(np.isfinite(vals)):
            raise ValidationError("matrix values must be finite")
        if np.any(vals == 0.0):
            raise ValidationError("explicit zeros are not stored; drop them first")

    # -- construction ---------------------------------------------------

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triplets; sorts rows, drops exact zeros.

        Duplicate coordinates are an error rather than being summed: every
        producer in this package generates each entry exactly once, so a
        duplicate always indicates a corrupt input.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise ValidationError("coordinate arrays must be equal-length 1-D")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ValidationError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ValidationError("column index out of range")
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size > 1:
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if np.any(dup):
                k = int(np.argmax(dup))
                raise ValidationError(
                    f"duplicate entry at ({int(rows[k])}, {int(cols[k])})"
                )
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(n_rows, n_cols, offsets, cols, vals)

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise ValidationError("dense input must be 2-D")
        rows, cols = np.nonzero(dense)
        return cls.from_coo(*dense.shape, rows, cols, dense[rows, cols])

    # -- queries --------------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            sl = slice(self.row_offsets[i], self.row_offsets[i + 1])
            out[i, self.col_indices[sl]] = self.values[sl]
        return out

    def diagonal(self) -> np.ndarray:
        """Dense main diagonal; absent entries read as zero."""
        n = min(self.n_rows, self.n_cols)
        diag = np.zeros(n)
        for i in range(n):
            sl = slice(self.row_offsets[i], self.row_offsets[i + 1])
            hit = np.searchsorted(self.col_indices[sl], i)
            if hit < sl.stop - sl.start and self.col_indices[sl.start + hit] == i:
                diag[i] = self.values[sl.start + hit]
        return diag

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(column indices, values) of row ``i`` as read-only views."""
        sl = slice(self.row_offsets[i], self.row_offsets[i + 1])
        return self.col_indices[sl], self.values[sl]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the generator-matrix sanity check.

    ``ok`` is False exactly when some diagonal entry is positive.  Rows that
    merely make the walk stop (zero diagonal, or no off-diagonal entries)
    are legal but reported so callers can decide whether to allow them.
    """

    ok: bool
    bad_diagonal_rows: tuple[int, ...]
    zero_diagonal_rows: tuple[int, ...]
    absorbing_rows: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ChainKernel:
    """Walk-ready decomposition of a generator matrix.

    Per-row jump data is stored in CSR-like flat arrays: row ``i`` owns the
    slice ``row_ptr[i]:row_ptr[i+1]`` of ``jump_cols`` / ``jump_signs`` /
    ``row_cum``.  ``row_cum`` holds the cumulative jump probabilities of the
    row, ending exactly at 1.0; destination selection draws ``u`` uniform on
    (0, 1) and takes the first index whose cumulative value exceeds ``u``
    (half-open cells, so zero-probability cells are unreachable).

    ``absorbing[i]`` is True when the walk can never leave ``i``: either the
    exit rate ``|d[i]|`` is zero (the sojourn is infinite) or row ``i`` has
    no off-diagonal entries (the first jump terminates the path with weight
    zero).  ``w[i]`` is zero for such rows.
    """

    n: int
    d: np.ndarray  # float64, diagonal entries (<= 0)
    row_ptr: np.ndarray  # int64, length n + 1
    jump_cols: np.ndarray  # int64
    jump_signs: np.ndarray  # float64, +-1.0
    row_cum: np.ndarray  # float64, per-row cumulative probabilities
    w: np.ndarray  # float64, per-jump weight magnitude
    absorbing: np.ndarray  # bool

    def __post_init__(self):
        for name, dtype in [
            ("d", np.float64),
            ("row_ptr", np.int64),
            ("jump_cols", np.int64),
            ("jump_signs", np.float64),
            ("row_cum", np.float64),
            ("w", np.float64),
            ("absorbing", np.bool_),
        ]:
            object.__setattr__(self, name, _as_locked(getattr(self, name), dtype))


def validate_generator(A: SparseMatrix) -> ValidationReport:
    """Check the generator-matrix preconditions for a square matrix ``A``."""
    if A.n_rows != A.n_cols:
        raise ValidationError(f"matrix must be square, got {A.n_rows}x{A.n_cols}")
    diag = A.diagonal()
    bad = []
    zero = []
    absorbing = []
    for i in range(A.n_rows):
        if diag[i] > 0.0:
            bad.append(i)
        elif diag[i] == 0.0:
            zero.append(i)
        cols, _ = A.row(i)
        off = cols.size - int(i in cols)
        if off == 0 or diag[i] == 0.0:
            absorbing.append(i)
    return ValidationReport(
        ok=not bad,
        bad_diagonal_rows=tuple(bad),
        zero_diagonal_rows=tuple(zero),
        absorbing_rows=tuple(absorbing),
    )


def decompose(A: SparseMatrix, allow_absorbing: bool = False) -> ChainKernel:
    """Split a generator matrix into its weighted jump-chain kernel.

    Raises :class:`ValidationError` if any diagonal entry is positive, or if
    the matrix contains absorbing rows and ``allow_absorbing`` is False.
    """
    report = validate_generator(A)
    if not report.ok:
        rows = ", ".join(map(str, report.bad_diagonal_rows[:10]))
        raise ValidationError(f"positive diagonal entries in rows: {rows}")
    if report.absorbing_rows and not allow_absorbing:
        rows = ", ".join(map(str, report.absorbing_rows[:10]))
        raise ValidationError(
            f"absorbing rows (zero rate or no off-diagonal entries): {rows}; "
            "pass allow_absorbing=True to accept them"
        )

    n = A.n_rows
    diag = A.diagonal()
    absorbing = np.zeros(n, dtype=bool)
    absorbing[list(report.absorbing_rows)] = True

    row_ptr = np.zeros(n + 1, dtype=np.int64)
    cols_out: list[np.ndarray] = []
    signs_out: list[np.ndarray] = []
    cum_out: list[np.ndarray] = []
    w = np.zeros(n)

    for i in range(n):
        cols, vals = A.row(i)
        off = cols != i
        ocols, ovals = cols[off], vals[off]
        if absorbing[i] or ocols.size == 0:
            # never jumped from: either infinite sojourn (d == 0) or the
            # first jump kills the path (w == 0)
            row_ptr[i + 1] = row_ptr[i]
            continue
        mags = np.abs(ovals)
        total = float(mags.sum())
        cum = np.cumsum(mags) / total
        if abs(cum[-1] - 1.0) > _CUM_ULPS * math.ulp(1.0):
            raise ValidationError(f"row {i}: cumulative probability drifted from 1")
        cum[-1] = 1.0
        w[i] = total / abs(diag[i])
        cols_out.append(ocols)
        signs_out.append(np.where(ovals > 0.0, 1.0, -1.0))
        cum_out.append(cum)
        row_ptr[i + 1] = row_ptr[i] + ocols.size

    cat = lambda parts, dt: (
        np.concatenate(parts) if parts else np.empty(0, dtype=dt)
    )
    return ChainKernel(
        n=n,
        d=diag,
        row_ptr=row_ptr,
        jump_cols=cat(cols_out, np.int64),
        jump_signs=cat(signs_out, np.float64),
        row_cum=cat(cum_out, np.float64),
        w=w,
        absorbing=absorbing,
    )


def reconstruct_offdiagonal(kernel: ChainKernel) -> SparseMatrix:
    """Rebuild the off-diagonal part of the matrix a kernel came from.

    Inverse of :func:`decompose` up to floating-point round-off:
    ``m_ij = |d_i| * w_i * q_ij * sign_ij`` with ``q_ij`` recovered from the
    per-row cumulative differences.  Rows flagged absorbing contribute no
    entries (their off-diagonal data, if any, was discarded by decompose).
    """
    n = kernel.n
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i in range(n):
        lo, hi = kernel.row_ptr[i], kernel.row_ptr[i + 1]
        if lo == hi:
            continue
        cum = kernel.row_cum[lo:hi]
        q = np.diff(cum, prepend=0.0)
        scale = abs(kernel.d[i]) * kernel.w[i]
        for k in range(hi - lo):
            rows.append(i)
            cols.append(int(kernel.jump_cols[lo + k]))
            vals.append(scale * q[k] * kernel.jump_signs[lo + k])
    return SparseMatrix.from_coo(n, n, rows, cols, vals)


def transpose(A: SparseMatrix) -> SparseMatrix:
    """Transpose as a new canonical-form matrix."""
    rows = np.repeat(np.arange(A.n_rows, dtype=np.int64), np.diff(A.row_offsets))
    return SparseMatrix.from_coo(
        A.n_cols, A.n_rows, A.col_indices, rows, A.values
    )
