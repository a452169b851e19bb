"""Benchmark problems: 2D fractional diffusion and FEM system ingestion.

``build_diffusion_2d`` discretizes the Laplacian on the open unit square
with an ``m x m`` interior grid (homogeneous Dirichlet boundary), scaled so
the generator is

    A = (m^2 / (4 mu^2)) * L,   L = five-point stencil with diagonal -4,

i.e. every diagonal entry is ``-m^2 / mu^2`` and every neighbor coupling is
``+m^2 / (4 mu^2)``.  Nodes are numbered row-major: grid point ``(i, j)``
(1-based, ``i`` the row) is vector index ``(i-1)*m + (j-1)``.

The eigenstructure is known in closed form (products of sines), which gives
an analytic reference solution via two symmetric sine transforms — the
yardstick every Monte Carlo acceptance test compares against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ValidationError
from .mlfun import gamma_fn, ml_scalar
from .mmio import read_matrix_market, read_vector
from .sparse import SparseMatrix, validate_generator

__all__ = [
    "DiffusionSpec",
    "ProblemBundle",
    "build_diffusion_2d",
    "impulse_vector",
    "diffusion_analytic_solution",
    "stiffness_ratio",
    "variance_prediction",
    "load_fem_system",
]

_ANALYTIC_MAX_M = 256


@dataclass(frozen=True)
class DiffusionSpec:
    """Parameters of the square-grid diffusion benchmark.

    ``m`` interior nodes per side, diffusivity scale ``mu``, an initial
    impulse of strength ``c`` (vector value ``c * m^2``, unit spatial mass)
    at the center node, to be evolved to time ``t`` with fractional order
    ``alpha``.
    """

    m: int
    mu: float = 1.0
    strength: float = 1.0 / 4096.0
    t: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.m < 2:
            raise ValidationError(f"m must be at least 2, got {self.m}")
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ValidationError(f"mu must be positive and finite, got {self.mu}")
        if not math.isfinite(self.strength):
            raise ValidationError("impulse strength must be finite")
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise ValidationError(f"t must be nonnegative and finite, got {self.t}")

    @property
    def n(self) -> int:
        return self.m * self.m

    @property
    def center_index(self) -> int:
        """Vector index of grid node (m//2, m//2), 1-based node numbering."""
        r = self.m // 2 - 1
        return r * self.m + r


@dataclass(frozen=True, eq=False)
class ProblemBundle:
    """A ready-to-solve system plus whatever reference solution it admits.

    ``oracle(alpha, t)`` returns the exact solution vector, or is ``None``
    when no closed form is available (FEM imports).
    """

    A: SparseMatrix
    u0: np.ndarray
    metadata: dict
    oracle: Callable[[float, float], np.ndarray] | None = None


def build_diffusion_2d(spec: DiffusionSpec) -> ProblemBundle:
    """Assemble the grid generator and center impulse for a spec."""
    m = spec.m
    s = m * m / (4.0 * spec.mu**2)
    idx = np.arange(m * m, dtype=np.int64)
    i, j = np.divmod(idx, m)

    rows = [idx]
    cols = [idx]
    vals = [np.full(m * m, -4.0 * s)]
    for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ii, jj = i + di, j + dj
        keep = (ii >= 0) & (ii < m) & (jj >= 0) & (jj < m)
        rows.append(idx[keep])
        cols.append(ii[keep] * m + jj[keep])
        vals.append(np.full(int(keep.sum()), s))
    A = SparseMatrix.from_coo(
        m * m, m * m, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )

    meta = {
        "kind": "diffusion2d",
        "m": m,
        "mu": spec.mu,
        "strength": spec.strength,
        "n": spec.n,
        "impulse_index": spec.center_index,
        "diagonal": -m * m / spec.mu**2,
    }
    oracle = None
    if m <= _ANALYTIC_MAX_M:
        oracle = lambda alpha, t: diffusion_analytic_solution(
            DiffusionSpec(m, spec.mu, spec.strength, t, alpha)
        )
    return ProblemBundle(A=A, u0=impulse_vector(spec), metadata=meta, oracle=oracle)


def impulse_vector(spec: DiffusionSpec) -> np.ndarray:
    """Initial state: strength ``c * m^2`` at the center node, zero elsewhere.

    The ``m^2`` factor normalizes the impulse to unit mass in the continuum
    scaling (each grid cell has area ``1/m^2``).
    """
    u0 = np.zeros(spec.n)
    u0[spec.center_index] = spec.strength * spec.m**2
    return u0


def _grid_eigenvalues(m: int, mu: float) -> np.ndarray:
    """Eigenvalues lambda[x-1, y-1] of the grid generator (all negative)."""
    k = np.arange(1, m + 1)
    c = 2.0 * np.cos(k * math.pi / (m + 1.0))
    s = m * m / (4.0 * mu * mu)
    return s * (c[:, None] + c[None, :] - 4.0)


def diffusion_analytic_solution(spec: DiffusionSpec) -> np.ndarray:
    """Exact solution by sine-transform diagonalization.

    The symmetric orthogonal sine matrix ``S`` (an involution) diagonalizes
    the stencil in each grid direction, so the solution is
    ``S (E_alpha(lambda t^alpha) o (S U0 S)) S`` with ``o`` elementwise,
    flattened back to vector ordering.  Cost is two m x m transforms plus
    one Mittag-Leffler evaluation per distinct eigenvalue.
    """
    m = spec.m
    if m > _ANALYTIC_MAX_M:
        raise DomainError(
            f"analytic solution limited to m <= {_ANALYTIC_MAX_M}, got {m}"
        )
    if not (0.0 < spec.alpha <= 1.0):
        raise DomainError(f"alpha = {spec.alpha} outside (0, 1]")
    k = np.arange(1, m + 1)
    S = np.sqrt(2.0 / (m + 1.0)) * np.sin(
        np.outer(k, k) * math.pi / (m + 1.0)
    )
    lam = _grid_eigenvalues(m, spec.mu)
    ta = spec.t**spec.alpha

    cache: dict[float, float] = {}
    factors = np.empty_like(lam)
    it = np.nditer(lam, flags=["multi_index"])
    for lv in it:
        z = float(lv) * ta
        got = cache.get(z)
        if got is None:
            got = cache[z] = ml_scalar(spec.alpha, z)
        factors[it.multi_index] = got

    U0 = impulse_vector(spec).reshape(m, m)
    modes = S @ U0 @ S
    return (S @ (factors * modes) @ S).ravel()


def stiffness_ratio(m: int, mu: float = 1.0) -> float:
    """Extreme-eigenvalue ratio |lambda_max| / |lambda_min| of the grid.

    Grows like ``4 m^2 / pi^2``; equals 3 exactly at ``m = 2``.  Large
    ratios are the regime where uniformized/series methods struggle while
    the walk's cost only tracks the diagonal magnitude.
    """
    if m < 2:
        raise ValidationError(f"m must be at least 2, got {m}")
    c = math.cos(math.pi / (m + 1.0))
    return (1.0 + c) / (1.0 - c)


def variance_prediction(c: float, n_states: int, alpha: float, t: float) -> float:
    """Predicted per-path variance of the full-mode score at the impulse
    entry of the diffusion benchmark, in the large-grid limit.

    Every path scores 0 or ``+-c * n_states`` in a given bin, and the chance
    of ending back at the impulse node decays like the walk's return
    probability ``~ 1 / (n_states * t^alpha * Gamma(1 - alpha))``, giving

        var(score_center) ~ c^2 * n_states * t^{-alpha} / Gamma(1 - alpha).

    Divide by the path count for the variance of the estimate itself.  Only
    meaningful for ``alpha < 1`` (the Gamma factor diverges as alpha -> 1,
    where the decay law changes form) and approximate at small grids.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(
            f"variance prediction needs alpha strictly inside (0, 1), got {alpha}"
        )
    if t <= 0.0:
        raise DomainError("variance prediction needs t > 0")
    if n_states < 1:
        raise ValidationError("n_states must be at least 1")
    return c * c * n_states / (t**alpha * gamma_fn(1.0 - alpha))


def load_fem_system(
    stiffness_path, mass_path, initial_path
) -> ProblemBundle:
    """Ingest a finite-element pair (K, lumped mass B) and initial vector.

    Builds ``A = B^{-1} K`` by row scaling — the generator of the walk for
    a Galerkin semi-discretization with diagonalized (lumped) mass matrix
    and homogeneous Dirichlet boundary.  The mass file holds the positive
    diagonal of B (vector file or Matrix Market).  Raises
    :class:`ValidationError` when B has nonpositive entries, dimensions
    disagree, or the scaled matrix fails generator validation.
    """
    K = read_matrix_market(stiffness_path)
    if K.n_rows != K.n_cols:
        raise ValidationError("stiffness matrix must be square")
    mass = read_vector(mass_path)
    if mass.size != K.n_rows:
        raise ValidationError(
            f"mass diagonal length {mass.size} does not match matrix "
            f"dimension {K.n_rows}"
        )
    if np.any(mass <= 0.0):
        bad = np.nonzero(mass <= 0.0)[0][:10]
        raise ValidationError(f"mass diagonal must be positive; bad rows {bad.tolist()}")
    u0 = read_vector(initial_path)
    if u0.size != K.n_rows:
        raise ValidationError(
            f"initial vector length {u0.size} does not match matrix "
            f"dimension {K.n_rows}"
        )

    row_of = np.repeat(np.arange(K.n_rows, dtype=np.int64), np.diff(K.row_offsets))
    A = SparseMatrix(
        K.n_rows,
        K.n_cols,
        K.row_offsets,
        K.col_indices,
        K.values / mass[row_of],
    )
    report = validate_generator(A)
    if not report.ok:
        rows = ", ".join(map(str, report.bad_diagonal_rows[:10]))
        raise ValidationError(
            f"scaled stiffness has positive diagonal entries in rows: {rows}"
        )
    meta = {
        "kind": "fem",
        "n": A.n_rows,
        "stiffness_file": str(stiffness_path),
        "mass_file": str(mass_path),
        "initial_file": str(initial_path),
        "absorbing_rows": list(report.absorbing_rows),
    }
    return ProblemBundle(A=A, u0=u0, metadata=meta, oracle=None)
