"""Command-line interface.

Subcommands::

    gen-diffusion   write the 2D diffusion benchmark (matrix, vector, meta)
    solve           Monte Carlo solve: full vector or selected entries
    oracle          analytic / dense reference solution, optional comparison
    convergence     error-vs-paths sweep against a reference
    scaling         wall-time sweeps over t, problem size, or workers
    merge           combine partial-sums files into one report

Exit codes: 0 success, 2 usage, 3 invalid input, 4 numeric-domain refusal.
On failure a machine-readable ``{"error": {...}}`` object is printed to
stdout.  Primary outputs (reports, tables, generated files) are byte-stable
for fixed inputs; timing chatter goes to stderr only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .engine import (
    SolveRequest,
    merge_partials,
    prepare_job,
    read_partial,
    run_parallel,
    run_worker,
    write_partial,
)
from .errors import DomainError, ValidationError
from .mlfun import dense_ml_oracle
from .mmio import read_matrix_market, read_vector, write_matrix_market, write_vector
from .problems import (
    DiffusionSpec,
    build_diffusion_2d,
    diffusion_analytic_solution,
    load_fem_system,
)

__all__ = ["main"]


def _info(msg: str) -> None:
    print(f"[fracwalk] {msg}", file=sys.stderr)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="ascii")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _parse_entries(text: str) -> tuple[int, ...]:
    try:
        ent = tuple(int(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise ValidationError(f"cannot parse entry list {text!r}") from None
    if not ent:
        raise ValidationError("entry list is empty")
    return ent


def _parse_floats(text: str) -> list[float]:
    try:
        vals = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise ValidationError(f"cannot parse numeric list {text!r}") from None
    if not vals:
        raise ValidationError("numeric list is empty")
    return vals


def _parse_ints(text: str) -> list[int]:
    vals = _parse_floats(text)
    out = [int(v) for v in vals]
    if any(v != iv for v, iv in zip(vals, out)):
        raise ValidationError(f"expected integers in {text!r}")
    return out


def _load_system(args):
    """(A, u0) from the --matrix/--vector/--mass flags."""
    if args.mass is not None:
        bundle = load_fem_system(args.matrix, args.mass, args.vector)
        return bundle.A, bundle.u0
    return read_matrix_market(args.matrix), read_vector(args.vector)


def _report_dict(report, mode: str, args, entries) -> dict:
    out = {
        "mode": mode,
        "alpha": args.alpha,
        "t": args.time,
        "n_paths": report.n_paths,
        "seed": args.seed,
        "workers": args.workers,
        "confidence": report.confidence,
    }
    if entries is not None:
        out["entries"] = list(entries)
    out.update(
        values=[float(v) for v in report.values],
        sample_variance=[float(v) for v in report.sample_variance],
        ci_halfwidth=[float(v) for v in report.ci_halfwidth],
        mean_events_per_path=report.mean_events_per_path,
        total_events=report.total_events,
    )
    return out


def _report_csv(report, entries) -> str:
    lines = ["index,value,sample_variance,ci_halfwidth"]
    idx = entries if entries is not None else range(report.values.size)
    for k, i in enumerate(idx):
        lines.append(
            f"{i},{float(report.values[k])!r},"
            f"{float(report.sample_variance[k])!r},"
            f"{float(report.ci_halfwidth[k])!r}"
        )
    return "\n".join(lines) + "\n"


# -- subcommands --------------------------------------------------------

def cmd_gen_diffusion(args) -> int:
    spec = DiffusionSpec(m=args.m, mu=args.mu, strength=args.strength)
    bundle = build_diffusion_2d(spec)
    prefix = Path(args.out_prefix)
    if prefix.parent != Path("") and not prefix.parent.exists():
        raise ValidationError(f"output directory {prefix.parent} does not exist")
    matrix_file = f"{prefix}_A.mtx"
    vector_file = f"{prefix}_u0.txt"
    meta_file = f"{prefix}_meta.json"
    write_matrix_market(bundle.A, matrix_file)
    write_vector(bundle.u0, vector_file)
    meta = dict(bundle.metadata)
    meta["matrix_file"] = str(matrix_file)
    meta["vector_file"] = str(vector_file)
    Path(meta_file).write_text(_json_text(meta), encoding="ascii")
    _info(
        f"wrote {matrix_file} ({bundle.A.n_rows} rows, {bundle.A.nnz} entries), "
        f"{vector_file}, {meta_file}"
    )
    return 0


def _build_request(args, entries) -> SolveRequest:
    return SolveRequest(
        alpha=args.alpha,
        t=args.time,
        n_paths=args.paths,
        root_seed=args.seed,
        workers=args.workers,
        entries=entries,
        confidence=args.confidence,
    )


def cmd_solve(args) -> int:
    entries = _parse_entries(args.entries) if args.entries is not None else None
    A, u0 = _load_system(args)
    req = _build_request(args, entries)
    job = prepare_job(A, u0, req, allow_absorbing=args.allow_absorbing)

    if args.only_worker is not None:
        if args.out is None:
            raise ValidationError("--only-worker requires --out for the partial file")
        part = run_worker(job, args.workers, args.only_worker)
        write_partial(part, args.out)
        _info(
            f"worker {args.only_worker}/{args.workers}: {part.n_walks} walks, "
            f"{part.event_count} events -> {args.out}"
        )
        return 0

    report = run_parallel(job, args.workers)
    mode = "entries" if entries is not None else "full"
    if args.format == "json":
        _emit(_json_text(_report_dict(report, mode, args, entries)), args.out)
    else:
        _emit(_report_csv(report, entries), args.out)
    _info(
        f"{mode} solve: wall {report.wall_time:.3f} s, "
        f"{report.total_events} events, "
        f"{report.mean_events_per_path:.2f} events/path"
    )
    return 0


def _oracle_values(args) -> tuple[np.ndarray, str]:
    if args.meta is not None:
        try:
            meta = json.loads(Path(args.meta).read_text(encoding="ascii"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.meta}: not valid JSON ({exc})") from None
        if meta.get("kind") != "diffusion2d":
            raise ValidationError(
                f"{args.meta}: oracle only knows kind 'diffusion2d', "
                f"got {meta.get('kind')!r}"
            )
        try:
            spec = DiffusionSpec(
                m=int(meta["m"]),
                mu=float(meta["mu"]),
                strength=float(meta["strength"]),
                t=args.time,
                alpha=args.alpha,
            )
        except KeyError as exc:
            raise ValidationError(f"{args.meta}: missing field {exc}") from None
        return diffusion_analytic_solution(spec), "diffusion2d"
    if args.vector is None:
        raise ValidationError("--matrix needs --vector for the initial state")
    A = read_matrix_market(args.matrix)
    u0 = read_vector(args.vector)
    if A.n_rows != A.n_cols:
        raise ValidationError("oracle matrix must be square")
    return (
        dense_ml_oracle(args.alpha, A.to_dense(), args.time, u0),
        "dense",
    )


def cmd_oracle(args) -> int:
    values, kind = _oracle_values(args)
    out = {
        "mode": "oracle",
        "kind": kind,
        "alpha": args.alpha,
        "t": args.time,
        "values": [float(v) for v in values],
    }
    if args.solve_report is not None:
        try:
            rep = json.loads(Path(args.solve_report).read_text(encoding="ascii"))
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{args.solve_report}: not valid JSON ({exc})"
            ) from None
        est = np.asarray(rep.get("values", []), dtype=np.float64)
        picked = values
        if "entries" in rep:
            idx = [int(i) for i in rep["entries"]]
            bad = [i for i in idx if not 0 <= i < values.size]
            if bad:
                raise ValidationError(f"solve report entries out of range: {bad[:10]}")
            picked = values[idx]
        if est.size != picked.size:
            raise ValidationError(
                f"solve report has {est.size} values, oracle has {picked.size}"
            )
        diff = est - picked
        out["comparison"] = {
            "solve_report": str(args.solve_report),
            "diff": [float(d) for d in diff],
            "max_abs_diff": float(np.max(np.abs(diff))),
        }
    _emit(_json_text(out), args.out)
    return 0


def _reference_solution(args):
    """Reference vector for sweeps: analytic when --meta, dense otherwise."""
    values, _ = _oracle_values(args)
    return values


def cmd_convergence(args) -> int:
    ladder = _parse_ints(args.paths_list)
    if any(n < 1 for n in ladder):
        raise ValidationError("path counts must be positive")
    reference = _reference_solution(args)
    if args.meta is not None:
        meta = json.loads(Path(args.meta).read_text(encoding="ascii"))
        try:
            A = read_matrix_market(meta["matrix_file"])
            u0 = read_vector(meta["vector_file"])
        except KeyError as exc:
            raise ValidationError(f"{args.meta}: missing field {exc}") from None
    else:
        A = read_matrix_market(args.matrix)
        u0 = read_vector(args.vector)

    rows = []
    for k, n_paths in enumerate(ladder):
        req = SolveRequest(
            alpha=args.alpha,
            t=args.time,
            n_paths=n_paths,
            root_seed=args.seed + k,
            workers=args.workers,
        )
        job = prepare_job(A, u0, req, allow_absorbing=args.allow_absorbing)
        report = run_parallel(job, args.workers)
        err = float(np.max(np.abs(report.values - reference)))
        rows.append((n_paths, err, report.wall_time))
        _info(f"n_paths {n_paths}: max abs error {err:.3e} ({report.wall_time:.2f} s)")

    lines = ["n_paths,max_abs_error,wall_time_s"]
    for n_paths, err, wt in rows:
        lines.append(f"{n_paths},{err!r},{wt!r}")
    if len(rows) >= 2:
        slope = float(
            np.polyfit(
                np.log10([r[0] for r in rows]), np.log10([r[1] for r in rows]), 1
            )[0]
        )
        lines.append(f"# fitted_slope,{slope!r}")
        _info(f"fitted log-log slope {slope:.3f}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_scaling(args) -> int:
    def run_one(A, u0, t, workers, n_paths):
        req = SolveRequest(
            alpha=args.alpha,
            t=t,
            n_paths=n_paths,
            root_seed=args.seed,
            workers=workers,
        )
        job = prepare_job(A, u0, req, allow_absorbing=args.allow_absorbing)
        return run_parallel(job, workers)

    def diffusion_system(m):
        bundle = build_diffusion_2d(DiffusionSpec(m=m, mu=args.mu))
        return bundle.A, bundle.u0

    rows = []
    if args.sweep in ("time", "workers"):
        if args.meta is not None:
            meta = json.loads(Path(args.meta).read_text(encoding="ascii"))
            A = read_matrix_market(meta["matrix_file"])
            u0 = read_vector(meta["vector_file"])
        elif args.matrix is not None:
            A = read_matrix_market(args.matrix)
            u0 = read_vector(args.vector)
        else:
            raise ValidationError(f"--sweep {args.sweep} needs --meta or --matrix")
        run_one(A, u0, min(args.time, 0.01), 1, 200)  # warm the compiled loops

    if args.sweep == "time":
        for t in _parse_floats(args.values):
            if t <= 0:
                raise ValidationError("time sweep values must be positive")
            rep = run_one(A, u0, t, args.workers, args.paths)
            rows.append((t, rep.wall_time, rep.total_events))
            _info(f"t {t}: wall {rep.wall_time:.3f} s, {rep.total_events} events")
        header = "t,wall_time_s,total_events"
        xcol = [r[0] for r in rows]
    elif args.sweep == "size":
        first = True
        for m in _parse_ints(args.values):
            A, u0 = diffusion_system(m)
            if first:
                run_one(A, u0, min(args.time, 0.01), 1, 200)
                first = False
            rep = run_one(A, u0, args.time, args.workers, args.paths)
            rows.append((m * m, rep.wall_time, rep.total_events))
            _info(f"m {m} (n {m*m}): wall {rep.wall_time:.3f} s")
        header = "n,wall_time_s,total_events"
        xcol = [r[0] for r in rows]
    elif args.sweep == "workers":
        base = None
        for w in _parse_ints(args.values):
            if w < 1:
                raise ValidationError("worker counts must be positive")
            rep = run_one(A, u0, args.time, w, args.paths)
            if base is None:
                base = rep.wall_time
            speed = base / rep.wall_time if rep.wall_time > 0 else float("nan")
            rows.append((w, rep.wall_time, speed))
            _info(f"workers {w}: wall {rep.wall_time:.3f} s, speedup {speed:.2f}")
        header = "workers,wall_time_s,speedup"
    else:  # pragma: no cover - argparse choices guard this
        raise ValidationError(f"unknown sweep {args.sweep!r}")

    lines = [header]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    if args.sweep in ("time", "size") and len(rows) >= 2:
        slope = float(
            np.polyfit(np.log10(xcol), np.log10([r[1] for r in rows]), 1)[0]
        )
        lines.append(f"# fitted_slope,{slope!r}")
        _info(f"fitted log-log slope {slope:.3f}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_merge(args) -> int:
    parts = [read_partial(p) for p in args.partials]
    t0 = time.perf_counter()
    report = merge_partials(parts, confidence=args.confidence)
    dt = time.perf_counter() - t0
    out = {
        "mode": "merged",
        "n_paths": report.n_paths,
        "confidence": report.confidence,
        "values": [float(v) for v in report.values],
        "sample_variance": [float(v) for v in report.sample_variance],
        "ci_halfwidth": [float(v) for v in report.ci_halfwidth],
        "mean_events_per_path": report.mean_events_per_path,
        "total_events": report.total_events,
    }
    if args.format == "json":
        _emit(_json_text(out), args.out)
    else:
        _emit(_report_csv(report, None), args.out)
    _info(f"merged {len(parts)} partials ({report.n_paths} paths) in {dt:.3f} s")
    return 0


# -- parser -------------------------------------------------------------

def _add_rng_flags(p):
    p.add_argument("--alpha", type=float, required=True, help="fractional order in (0, 1]")
    p.add_argument("--time", type=float, required=True, help="evolution time t >= 0")
    p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")


def _add_solver_flags(p):
    _add_rng_flags(p)
    p.add_argument("--paths", type=int, required=True, help="total Monte Carlo paths")
    p.add_argument("--workers", type=int, default=1, help="worker count (default 1)")
    p.add_argument(
        "--confidence",
        type=float,
        default=0.95,
        help="confidence level of the reported half-widths (default 0.95)",
    )
    p.add_argument(
        "--allow-absorbing",
        action="store_true",
        help="accept matrices with zero-rate or dead-end rows",
    )


def _add_system_flags(p, required=True):
    p.add_argument("--matrix", required=required, help="generator matrix (.mtx)")
    p.add_argument("--vector", required=required, help="initial vector file")
    p.add_argument(
        "--mass",
        default=None,
        help="lumped mass diagonal; when given, --matrix is a stiffness "
        "matrix and the system solved is the row-scaled one",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracwalk",
        description="Monte Carlo action of the Mittag-Leffler matrix function",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-diffusion", help="write the 2D diffusion benchmark files")
    p.add_argument("--m", type=int, required=True, help="interior grid nodes per side")
    p.add_argument("--mu", type=float, default=1.0, help="diffusivity scale (default 1)")
    p.add_argument(
        "--strength",
        type=float,
        default=1.0 / 4096.0,
        help="impulse strength c; vector value is c*m^2 (default 1/4096)",
    )
    p.add_argument("--out-prefix", required=True, help="prefix for _A.mtx/_u0.txt/_meta.json")
    p.set_defaults(func=cmd_gen_diffusion)

    p = sub.add_parser("solve", help="Monte Carlo solve")
    _add_system_flags(p)
    _add_solver_flags(p)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--full", action="store_true", help="estimate the whole vector")
    grp.add_argument("--entries", default=None, help="comma-separated row indices")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument(
        "--only-worker",
        type=int,
        default=None,
        metavar="K",
        help="write worker K's partial sums to --out instead of solving",
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="reference solution (analytic or dense)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--meta", default=None, help="metadata JSON from gen-diffusion")
    src.add_argument("--matrix", default=None, help="dense-oracle matrix (.mtx, n <= 64)")
    p.add_argument("--vector", default=None, help="initial vector (with --matrix)")
    _add_rng_flags(p)
    p.add_argument(
        "--solve-report",
        default=None,
        help="JSON solve report to difference against the reference",
    )
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("convergence", help="error-vs-paths sweep against a reference")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--meta", default=None, help="metadata JSON from gen-diffusion")
    src.add_argument("--matrix", default=None, help="matrix file (dense oracle, n <= 64)")
    p.add_argument("--vector", default=None, help="initial vector (with --matrix)")
    _add_rng_flags(p)
    p.add_argument("--paths-list", required=True, help="comma-separated path counts")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-absorbing", action="store_true")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("scaling", help="wall-time sweeps")
    p.add_argument("--sweep", choices=("time", "size", "workers"), required=True)
    p.add_argument("--values", required=True, help="comma-separated sweep values")
    p.add_argument("--meta", default=None, help="metadata JSON from gen-diffusion")
    _add_system_flags(p, required=False)
    _add_rng_flags(p)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mu", type=float, default=1.0, help="mu for --sweep size grids")
    p.add_argument("--allow-absorbing", action="store_true")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("merge", help="combine partial-sums files")
    p.add_argument("partials", nargs="+", help="partial-sums files from --only-worker")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_merge)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(_json_text({"error": {"type": "domain", "message": str(exc)}}), end="")
        return 4
    except ValidationError as exc:
        print(_json_text({"error": {"type": "validation", "message": str(exc)}}), end="")
        return 3
    except OSError as exc:
        print(_json_text({"error": {"type": "validation", "message": str(exc)}}), end="")
        return 3


if __name__ == "__main__":
    sys.exit(main())
