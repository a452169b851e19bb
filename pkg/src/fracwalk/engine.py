"""Monte Carlo engine: weighted-walk estimation of E_alpha(A t^alpha) u.

Two estimation modes share one walk primitive:

* **entries mode** (``solve_entries``): each requested component ``y_i`` gets
  its own independent batch of walks started at ``i`` on the jump chain of
  ``A``; a path ending in state ``e`` scores ``weight * u[e]``.
* **full mode** (``solve_full``): walks run on the jump chain of ``A``
  transposed, start states are drawn proportionally to ``|u|``, each path
  carries ``sign(u[start]) * ||u||_1`` times its accumulated weight and
  deposits that score in the bin of the state where it ends.  One batch
  estimates every component of ``y`` at once.

Work is split across workers by dividing the path budget into contiguous
blocks; worker ``k`` draws from substream ``(root_seed, k)`` (entries mode
interleaves: entry index ``e`` on worker ``k`` uses stream
``e * workers + k``).  Results are therefore bitwise reproducible for a
fixed ``(root_seed, workers)`` pair regardless of thread scheduling, and a
worker's block can equally be produced in a separate process, serialized
with ``write_partial`` and combined later with ``merge_partials`` — the
merged report is bitwise identical to the in-process run because partial
sums are always combined in ascending ``worker_id`` order.

``t = 0`` is answered exactly (``y = u``) with zero variance and no random
draws.
"""

from __future__ import annotations

import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist
from typing import NamedTuple
from weakref import WeakKeyDictionary

import numpy as np

from . import _kernels
from .errors import DomainError, ValidationError
from .sparse import ChainKernel, SparseMatrix, decompose, transpose
from .streams import RandomStream

__all__ = [
    "SolveRequest",
    "SolveJob",
    "EstimateReport",
    "PartialSums",
    "WalkResult",
    "PathStatistics",
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
]

_CUM_ULPS = 4


def _lock(arr: np.ndarray, dtype=np.float64) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SolveRequest:
    """What to estimate and with how much effort.

    ``entries = None`` selects full mode; a tuple of row indices selects
    entries mode.  ``confidence`` controls the half-width reported with
    each estimate (two-sided normal interval).
    """

    alpha: float
    t: float
    n_paths: int
    root_seed: int = 0
    workers: int = 1
    entries: tuple[int, ...] | None = None
    confidence: float = 0.95

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha = {self.alpha} outside (0, 1]")
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise DomainError(f"time must be finite and nonnegative, got {self.t}")
        if self.n_paths < 1:
            raise ValidationError("n_paths must be at least 1")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")
        if self.root_seed < 0:
            raise ValidationError("root_seed must be nonnegative")
        if not (0.0 < self.confidence < 1.0):
            raise ValidationError("confidence must lie strictly between 0 and 1")
        if self.entries is not None:
            ent = tuple(int(i) for i in self.entries)
            if not ent:
                raise ValidationError("entries tuple must be nonempty")
            object.__setattr__(self, "entries", ent)


@dataclass(frozen=True, eq=False)
class SolveJob:
    """A request bound to a decomposed matrix, ready to run.

    ``kernel`` is the jump chain of ``A`` in entries mode and of the
    transpose of ``A`` in full mode; ``start_cum``/``u_sign``/``norm1``
    exist only in full mode.
    """

    kernel: ChainKernel
    u: np.ndarray
    alpha: float
    t: float
    n_paths: int
    root_seed: int
    confidence: float
    entries: tuple[int, ...] | None
    start_cum: np.ndarray | None
    u_sign: np.ndarray | None
    norm1: float


@dataclass(frozen=True, eq=False)
class PartialSums:
    """One worker's raw accumulators, mergeable and serializable.

    ``n_paths`` is the worker's share of the path budget (per start state in
    entries mode); ``n_walks`` is the number of walks actually executed
    (``n_paths`` in full mode, ``n_paths * len(entries)`` in entries mode),
    which is what event counts are averaged over.
    """

    n: int
    worker_id: int
    n_paths: int
    n_walks: int
    event_count: int
    sums: np.ndarray
    sums_sq: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("partial must cover at least one slot")
        if min(self.worker_id, self.n_paths, self.n_walks, self.event_count) < 0:
            raise ValidationError("partial counters must be nonnegative")
        object.__setattr__(self, "sums", _lock(self.sums))
        object.__setattr__(self, "sums_sq", _lock(self.sums_sq))
        if self.sums.shape != (self.n,) or self.sums_sq.shape != (self.n,):
            raise ValidationError("accumulator arrays must have length n")
        if not (np.all(np.isfinite(self.sums)) and np.all(np.isfinite(self.sums_sq))):
            raise ValidationError("accumulators must be finite")


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Merged estimate with its own error bars and cost counters."""

    values: np.ndarray
    sample_variance: np.ndarray
    ci_halfwidth: np.ndarray
    n_paths: int
    mean_events_per_path: float
    total_events: int
    wall_time: float
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "values", _lock(self.values))
        object.__setattr__(self, "sample_variance", _lock(self.sample_variance))
        object.__setattr__(self, "ci_halfwidth", _lock(self.ci_halfwidth))


class WalkResult(NamedTuple):
    end_state: int
    weight: float
    n_events: int


@dataclass(frozen=True)
class PathStatistics:
    """Cost diagnostics of a finished run, for comparison against the
    fractional renewal-process prediction of mean event counts."""

    mean_events_per_path: float
    total_events: int
    n_paths: int


# -- kernel argument preparation ----------------------------------------

# per-kernel cache of the flat argument tuples the compiled loops take;
# keyed weakly so kernels can be garbage collected
_WALK_ARGS: "WeakKeyDictionary[ChainKernel, dict[float, tuple]]" = WeakKeyDictionary()


def _walk_args(kernel: ChainKernel, alpha: float) -> tuple:
    per_kernel = _WALK_ARGS.setdefault(kernel, {})
    args = per_kernel.get(alpha)
    if args is None:
        d_abs = np.abs(kernel.d)
        with np.errstate(divide="ignore"):
            scale = d_abs ** (-1.0 / alpha)  # inf on zero-rate rows, never read
        d_abs.flags.writeable = False
        scale.flags.writeable = False
        api = math.pi * alpha
        args = (
            d_abs,
            scale,
            kernel.row_ptr,
            kernel.jump_cols,
            kernel.row_cum,
            kernel.jump_signs,
            kernel.w,
            alpha == 1.0,
            api,
            math.sin(api),
            math.cos(api),
            1.0 / alpha,
        )
        per_kernel[alpha] = args
    return args


def walk_once(
    kernel: ChainKernel, alpha: float, t: float, start: int, stream: RandomStream
) -> WalkResult:
    """Run a single weighted walk; the building block of everything else.

    The walk repeatedly samples a heavy-tail sojourn at the rate of the
    state it currently occupies and, while its clock stays below ``t``,
    jumps according to the kernel's law, multiplying its weight by
    ``w[state] * sign`` at each jump.  Zero-rate states hold the walk
    forever (weight kept); states without destinations end it with weight
    zero once their sojourn fires.  At ``t = 0`` no randomness is consumed.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha = {alpha} outside (0, 1]")
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError(f"time must be finite and nonnegative, got {t}")
    if not 0 <= start < kernel.n:
        raise ValidationError(f"start state {start} outside 0..{kernel.n - 1}")
    end, weight, events = _kernels.walk(
        *_walk_args(kernel, alpha), t, start, stream.gen
    )
    return WalkResult(int(end), float(weight), int(events))


# -- job preparation ----------------------------------------------------

def prepare_job(
    A: SparseMatrix, u, req: SolveRequest, allow_absorbing: bool = False
) -> SolveJob:
    """Validate inputs and bind a request to its decomposed jump chain."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size != A.n_rows:
        raise ValidationError(
            f"vector length {u.size} does not match matrix dimension {A.n_rows}"
        )
    if not np.all(np.isfinite(u)):
        raise ValidationError("initial vector must be finite")

    if req.entries is not None:
        bad = [i for i in req.entries if not 0 <= i < A.n_rows]
        if bad:
            raise ValidationError(f"entry indices out of range: {bad[:10]}")
        kernel = decompose(A, allow_absorbing=allow_absorbing)
        start_cum = None
        u_sign = None
        norm1 = 0.0
    else:
        kernel = decompose(transpose(A), allow_absorbing=allow_absorbing)
        norm1 = float(np.abs(u).sum())
        if norm1 == 0.0:
            raise ValidationError("full mode needs a nonzero initial vector")
        cum = np.cumsum(np.abs(u)) / norm1
        if abs(cum[-1] - 1.0) > _CUM_ULPS * math.ulp(1.0):
            raise ValidationError("start distribution drifted from total mass 1")
        cum[-1] = 1.0
        start_cum = cum
        u_sign = np.where(u >= 0.0, 1.0, -1.0)

    return SolveJob(
        kernel=kernel,
        u=_lock(u),
        alpha=req.alpha,
        t=req.t,
        n_paths=req.n_paths,
        root_seed=req.root_seed,
        confidence=req.confidence,
        entries=req.entries,
        start_cum=None if start_cum is None else _lock(start_cum),
        u_sign=None if u_sign is None else _lock(u_sign),
        norm1=norm1,
    )


def _block_size(n_paths: int, workers: int, worker_id: int) -> int:
    return n_paths // workers + (1 if worker_id < n_paths % workers else 0)


def run_worker(job: SolveJob, workers: int, worker_id: int) -> PartialSums:
    """Produce the partial sums of one worker's contiguous path block.

    Deterministic given ``(job, workers, worker_id)`` alone, so blocks may
    be computed in any order, on any thread, or in separate processes.
    """
    if workers < 1:
        raise ValidationError("workers must be at least 1")
    if not 0 <= worker_id < workers:
        raise ValidationError(f"worker_id {worker_id} outside 0..{workers - 1}")
    block = _block_size(job.n_paths, workers, worker_id)

    if job.entries is not None:
        n_slots = len(job.entries)
        sums = np.zeros(n_slots)
        sums_sq = np.zeros(n_slots)
        events = 0
        if block > 0 and job.t == 0.0:
            picked = job.u[list(job.entries)]
            sums = picked * block
            sums_sq = picked * picked * block
        elif block > 0:
            args = _walk_args(job.kernel, job.alpha)
            for slot, state in enumerate(job.entries):
                stream = RandomStream.from_root(
                    job.root_seed, slot * workers + worker_id
                )
                s, s2, ev = _kernels.entry_block(
                    *args, job.t, job.u, state, block, stream.gen
                )
                sums[slot] = s
                sums_sq[slot] = s2
                events += int(ev)
        n_walks = block * n_slots
    else:
        n = job.kernel.n
        sums = np.zeros(n)
        sums_sq = np.zeros(n)
        events = 0
        if block > 0 and job.t == 0.0:
            sums = job.u * block
            sums_sq = job.u * job.u * block
        elif block > 0:
            args = _walk_args(job.kernel, job.alpha)
            stream = RandomStream.from_root(job.root_seed, worker_id)
            sums, sums_sq, ev = _kernels.full_block(
                *args, job.t, job.start_cum, job.u_sign, job.norm1,
                n, block, stream.gen,
            )
            events = int(ev)
        n_walks = block

    return PartialSums(
        n=sums.size,
        worker_id=worker_id,
        n_paths=block,
        n_walks=n_walks,
        event_count=events,
        sums=sums,
        sums_sq=sums_sq,
    )


def run_parallel(job: SolveJob, workers: int) -> EstimateReport:
    """Run every worker block (threads; compiled loops drop the GIL) and merge."""
    t0 = time.perf_counter()
    if job.t == 0.0:
        # exact identity: no walks, no variance, no random draws
        vals = job.u[list(job.entries)] if job.entries is not None else job.u.copy()
        zeros = np.zeros(vals.size)
        return EstimateReport(
            values=vals,
            sample_variance=zeros,
            ci_halfwidth=zeros.copy(),
            n_paths=job.n_paths,
            mean_events_per_path=0.0,
            total_events=0,
            wall_time=time.perf_counter() - t0,
            confidence=job.confidence,
        )
    if workers == 1:
        parts = [run_worker(job, 1, 0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda k: run_worker(job, workers, k), range(workers))
            )
    return merge_partials(
        parts, confidence=job.confidence, wall_time=time.perf_counter() - t0
    )


def solve_entries(
    A: SparseMatrix, u, req: SolveRequest, *, allow_absorbing: bool = False
) -> EstimateReport:
    """Estimate the requested components of ``y = E_alpha(A t^alpha) u``."""
    if req.entries is None:
        raise ValidationError("solve_entries needs a request with entry indices")
    job = prepare_job(A, u, req, allow_absorbing=allow_absorbing)
    return run_parallel(job, req.workers)


def solve_full(
    A: SparseMatrix, u, req: SolveRequest, *, allow_absorbing: bool = False
) -> EstimateReport:
    """Estimate every component of ``y = E_alpha(A t^alpha) u`` at once."""
    if req.entries is not None:
        raise ValidationError("solve_full takes a request without entry indices")
    job = prepare_job(A, u, req, allow_absorbing=allow_absorbing)
    return run_parallel(job, req.workers)


def merge_partials(
    parts, *, confidence: float = 0.95, wall_time: float = 0.0
) -> EstimateReport:
    """Combine worker partials into the final report.

    Partials are summed in ascending ``worker_id`` order — the one order
    every execution strategy (serial, threaded, merged-from-files) shares —
    so the merged result is bitwise stable.
    """
    parts = list(parts)
    if not parts:
        raise ValidationError("nothing to merge")
    ids = [p.worker_id for p in parts]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate worker_id among partials")
    sizes = {p.n for p in parts}
    if len(sizes) != 1:
        raise ValidationError(f"partials disagree on slot count: {sorted(sizes)}")
    if not (0.0 < confidence < 1.0):
        raise ValidationError("confidence must lie strictly between 0 and 1")

    n = parts[0].n
    sums = np.zeros(n)
    sums_sq = np.zeros(n)
    n_paths = 0
    n_walks = 0
    events = 0
    for p in sorted(parts, key=lambda p: p.worker_id):
        sums += p.sums
        sums_sq += p.sums_sq
        n_paths += p.n_paths
        n_walks += p.n_walks
        events += p.event_count
    if n_paths < 1:
        raise ValidationError("merged partials cover zero paths")

    values = sums / n_paths
    if n_paths > 1:
        var = (sums_sq - sums * sums / n_paths) / (n_paths - 1)
        np.maximum(var, 0.0, out=var)  # clip round-off below zero
    else:
        var = np.zeros(n)
    z = NormalDist().inv_cdf((1.0 + confidence) / 2.0)
    ci = z * np.sqrt(var / n_paths)
    return EstimateReport(
        values=values,
        sample_variance=var,
        ci_halfwidth=ci,
        n_paths=n_paths,
        mean_events_per_path=(events / n_walks) if n_walks else 0.0,
        total_events=events,
        wall_time=wall_time,
        confidence=confidence,
    )


def path_statistics(report: EstimateReport) -> PathStatistics:
    """Cost counters of a run, in the units the renewal prediction uses."""
    return PathStatistics(
        mean_events_per_path=report.mean_events_per_path,
        total_events=report.total_events,
        n_paths=report.n_paths,
    )


# -- partial-sums files --------------------------------------------------

_MAGIC = b"FWPARTLS"
_VERSION = 1
_HEADER = struct.Struct("<8sIqqqqq")  # magic, version, n, worker, paths, walks, events


def write_partial(part: PartialSums, path) -> None:
    """Serialize a partial to a flat little-endian binary file (version 1)."""
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                _MAGIC,
                _VERSION,
                part.n,
                part.worker_id,
                part.n_paths,
                part.n_walks,
                part.event_count,
            )
        )
        fh.write(np.ascontiguousarray(part.sums, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(part.sums_sq, dtype="<f8").tobytes())


def read_partial(path) -> PartialSums:
    """Read a file written by :func:`write_partial`, bit for bit."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValidationError(f"{path}: truncated partial-sums file")
    magic, version, n, worker_id, n_paths, n_walks, events = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValidationError(f"{path}: not a partial-sums file")
    if version != _VERSION:
        raise ValidationError(
            f"{path}: unsupported partial-sums version {version} (expected {_VERSION})"
        )
    expect = _HEADER.size + 16 * n
    if len(data) != expect:
        raise ValidationError(
            f"{path}: file holds {len(data)} bytes, header implies {expect}"
        )
    sums = np.frombuffer(data, dtype="<f8", count=n, offset=_HEADER.size).copy()
    sums_sq = np.frombuffer(
        data, dtype="<f8", count=n, offset=_HEADER.size + 8 * n
    ).copy()
    return PartialSums(
        n=n,
        worker_id=worker_id,
        n_paths=n_paths,
        n_walks=n_walks,
        event_count=events,
        sums=sums,
        sums_sq=sums_sq,
    )
