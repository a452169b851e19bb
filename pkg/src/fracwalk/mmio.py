"""Matrix Market coordinate files and plain-text vectors.

Readers are strict: malformed headers, out-of-range indices, duplicate
coordinates (including the mirror image of a symmetric entry), non-finite
values, and entry-count mismatches all raise :class:`MatrixMarketError`
carrying the 1-based line number.  Writers emit floats with ``repr`` so a
write/read round trip reproduces every value bit for bit.
"""

from __future__ import annotations

import numpy as np

from .errors import MatrixMarketError, ValidationError
from .sparse import SparseMatrix

__all__ = [
    "read_matrix_market",
    "write_matrix_market",
    "read_vector",
    "write_vector",
]

_BANNER = "%%MatrixMarket"


def _parse_float(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise MatrixMarketError(f"bad numeric value {tok!r}", lineno) from None
    if not np.isfinite(v):
        raise MatrixMarketError(f"non-finite value {tok!r}", lineno)
    return v


def _parse_index(tok: str, n: int, what: str, lineno: int) -> int:
    try:
        i = int(tok)
    except ValueError:
        raise MatrixMarketError(f"bad {what} index {tok!r}", lineno) from None
    if not 1 <= i <= n:
        raise MatrixMarketError(f"{what} index {i} outside 1..{n}", lineno)
    return i - 1


def read_matrix_market(path) -> SparseMatrix:
    """Read a ``coordinate real`` Matrix Market file (general or symmetric)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()

    if not lines or not lines[0].startswith(_BANNER):
        raise MatrixMarketError("missing %%MatrixMarket banner", 1)
    fields = lines[0].split()
    if [f.lower() for f in fields[1:4]] != ["matrix", "coordinate", "real"]:
        raise MatrixMarketError(
            f"unsupported header {lines[0].strip()!r}; "
            "need 'matrix coordinate real'",
            1,
        )
    try:
        symmetry = fields[4].lower()
    except IndexError:
        raise MatrixMarketError("header missing symmetry field", 1) from None
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", 1)

    # skip comments/blank lines, find the size line
    lineno = 1
    size = None
    while lineno < len(lines):
        lineno += 1
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError("size line must be 'rows cols nnz'", lineno)
        try:
            size = tuple(int(p) for p in parts)
        except ValueError:
            raise MatrixMarketError("size line must be integers", lineno) from None
        break
    if size is None:
        raise MatrixMarketError("missing size line")
    n_rows, n_cols, nnz = size
    if min(size) < 0:
        raise MatrixMarketError("negative size", lineno)
    if symmetry == "symmetric" and n_rows != n_cols:
        raise MatrixMarketError("symmetric matrix must be square", lineno)

    rows, cols, vals = [], [], []
    seen: dict[tuple[int, int], int] = {}
    count = 0
    while lineno < len(lines):
        lineno += 1
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        if count == nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError("entry line must be 'row col value'", lineno)
        i = _parse_index(parts[0], n_rows, "row", lineno)
        j = _parse_index(parts[1], n_cols, "column", lineno)
        v = _parse_float(parts[2], lineno)
        first = seen.setdefault((i, j), lineno)
        if first != lineno:
            raise MatrixMarketError(
                f"duplicate entry ({i + 1}, {j + 1}), first seen on line {first}",
                lineno,
            )
        rows.append(i)
        cols.append(j)
        vals.append(v)
        if symmetry == "symmetric" and i != j:
            first = seen.setdefault((j, i), lineno)
            if first != lineno:
                raise MatrixMarketError(
                    f"duplicate entry ({j + 1}, {i + 1}) via symmetry, "
                    f"first seen on line {first}",
                    lineno,
                )
            rows.append(j)
            cols.append(i)
            vals.append(v)
        count += 1
    if count != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, file has {count}")

    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def write_matrix_market(A: SparseMatrix, path) -> None:
    """Write in ``coordinate real general`` format, row-major order."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        for i in range(A.n_rows):
            cols, vals = A.row(i)
            for j, v in zip(cols, vals):
                fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def read_vector(path) -> np.ndarray:
    """Read a vector: plain text (one value per line) or Matrix Market array.

    Plain files may contain blank lines and ``%`` or ``#`` comments.  A
    Matrix Market file must be ``array real general`` with shape ``n 1``.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()

    start = 0
    declared = None
    if lines and lines[0].startswith(_BANNER):
        fields = [f.lower() for f in lines[0].split()[1:]]
        if fields != ["matrix", "array", "real", "general"]:
            raise MatrixMarketError(
                "vector file must be 'array real general'", 1
            )
        lineno = 1
        while lineno < len(lines):
            lineno += 1
            text = lines[lineno - 1].strip()
            if not text or text.startswith("%"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise MatrixMarketError("size line must be 'rows cols'", lineno)
            n, m = (int(p) for p in parts)
            if m != 1:
                raise MatrixMarketError(f"expected a column vector, got {n}x{m}", lineno)
            declared = n
            break
        if declared is None:
            raise MatrixMarketError("missing size line")
        start = lineno

    out = []
    for lineno in range(start + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%") or text.startswith("#"):
            continue
        for tok in text.split():
            out.append(_parse_float(tok, lineno))
    if declared is not None and len(out) != declared:
        raise MatrixMarketError(f"expected {declared} values, file has {len(out)}")
    if not out:
        raise MatrixMarketError("vector file contains no values")
    return np.array(out)


def write_vector(vec, path) -> None:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1:
        raise ValidationError("vector must be 1-D")
    if not np.all(np.isfinite(vec)):
        raise ValidationError("vector values must be finite")
    with open(path, "w", encoding="ascii") as fh:
        for v in vec:
            fh.write(f"{float(v)!r}\n")
