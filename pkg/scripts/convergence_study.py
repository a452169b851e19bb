#!/usr/bin/env python3
"""Error-vs-paths study on the 2-D diffusion benchmark.

Runs the full-vector solver over a ladder of path counts against the
analytic reference and reports the fitted log-log convergence slope
(expected: about -1/2).  Writes one CSV row per ladder rung.

Example:
    python3 scripts/convergence_study.py --m 16 --alpha 0.7 --paths 1e3,1e4,1e5,1e6
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from fracwalk import engine
from fracwalk.engine import SolveRequest
from fracwalk.problems import DiffusionSpec, build_diffusion_2d, diffusion_analytic_solution


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=16, help="grid nodes per side")
    ap.add_argument("--alpha", type=float, default=0.7, help="fractional order")
    ap.add_argument("--time", type=float, default=0.1, help="evolution time")
    ap.add_argument("--paths", default="1e3,1e4,1e5,1e6",
                    help="comma-separated path-count ladder")
    ap.add_argument("--seed", type=int, default=42, help="base seed (rung k uses seed+k)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/convergence.csv"))
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    ladder = [int(float(s)) for s in args.paths.split(",")]
    spec = DiffusionSpec(m=args.m, alpha=args.alpha, t=args.time)
    bundle = build_diffusion_2d(spec)
    exact = diffusion_analytic_solution(spec)

    rows = []
    for k, n_paths in enumerate(ladder):
        t0 = time.perf_counter()
        rep = engine.solve_full(
            bundle.A, bundle.u0,
            SolveRequest(alpha=args.alpha, t=args.time, n_paths=n_paths,
                         root_seed=args.seed + k, workers=args.workers))
        wall = time.perf_counter() - t0
        err = float(np.max(np.abs(rep.values - exact)))
        rows.append((n_paths, err, wall))
        print(f"n_paths {n_paths:>9d}  max_abs_error {err:.4e}  [{wall:.2f} s]")

    slope = float(np.polyfit(np.log10([r[0] for r in rows]),
                             np.log10([r[1] for r in rows]), 1)[0])
    print(f"fitted log-log slope: {slope:.4f} (expected about -0.5)")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("n_paths,max_abs_error,wall_time_s\n")
        for n_paths, err, wall in rows:
            fh.write(f"{n_paths},{err!r},{wall!r}\n")
        fh.write(f"# fitted_slope,{slope!r}\n")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
