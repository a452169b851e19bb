"""fracwalk: Monte Carlo action of the Mittag-Leffler matrix function.

Estimates ``y = E_alpha(A t^alpha) u`` — the solution map of linear
time-fractional initial value problems — by simulating weighted
continuous-time random walks whose sojourn times follow the Mittag-Leffler
law.  Works entry-by-entry or for the whole vector at once, off a sparse
generator-style matrix ``A`` (nonpositive diagonal, signed off-diagonals).
"""

from .engine import (
    EstimateReport,
    PartialSums,
    PathStatistics,
    SolveJob,
    SolveRequest,
    WalkResult,
    merge_partials,
    path_statistics,
    prepare_job,
    read_partial,
    run_parallel,
    run_worker,
    solve_entries,
    solve_full,
    walk_once,
    write_partial,
)
from .errors import DomainError, MatrixMarketError, ValidationError
from .mlfun import (
    MLParams,
    dense_ml_oracle,
    fractional_poisson_mean,
    gamma_fn,
    ml_scalar,
    ml_survival,
    series_switch_point,
)
from .mmio import read_matrix_market, read_vector, write_matrix_market, write_vector
from .problems import (
    DiffusionSpec,
    ProblemBundle,
    build_diffusion_2d,
    diffusion_analytic_solution,
    impulse_vector,
    load_fem_system,
    stiffness_ratio,
    variance_prediction,
)
from .sparse import (
    ChainKernel,
    SparseMatrix,
    ValidationReport,
    decompose,
    reconstruct_offdiagonal,
    transpose,
    validate_generator,
)
from .streams import (
    RandomStream,
    sample_ml,
    sample_next_state,
    spawn_streams,
    uniform_open,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "DomainError",
    "MatrixMarketError",
    "ValidationError",
    # matrices
    "SparseMatrix",
    "ValidationReport",
    "ChainKernel",
    "validate_generator",
    "decompose",
    "reconstruct_offdiagonal",
    "transpose",
    # io
    "read_matrix_market",
    "write_matrix_market",
    "read_vector",
    "write_vector",
    # special functions
    "MLParams",
    "gamma_fn",
    "ml_scalar",
    "ml_survival",
    "fractional_poisson_mean",
    "series_switch_point",
    "dense_ml_oracle",
    # random streams
    "RandomStream",
    "spawn_streams",
    "uniform_open",
    "sample_ml",
    "sample_next_state",
    # engine
    "SolveRequest",
    "SolveJob",
    "EstimateReport",
    "PartialSums",
    "PathStatistics",
    "WalkResult",
    "walk_once",
    "prepare_job",
    "solve_entries",
    "solve_full",
    "run_parallel",
    "run_worker",
    "merge_partials",
    "path_statistics",
    "write_partial",
    "read_partial",
    # problems
    "DiffusionSpec",
    "ProblemBundle",
    "build_diffusion_2d",
    "impulse_vector",
    "diffusion_analytic_solution",
    "stiffness_ratio",
    "variance_prediction",
    "load_fem_system",
]
