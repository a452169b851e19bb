#!/usr/bin/env python3
"""Per-path variance study at the impulse node of the diffusion benchmark.

Two sweeps of the single-entry estimator:
  * size sweep at fixed alpha — the per-path variance should grow
    linearly in N = m*m (a least-squares line and its R^2 are reported);
  * alpha sweep at fixed size — the variance should follow the shape
    t**-alpha / Gamma(1 - alpha) up to a constant factor.

Measured values are printed next to the closed-form prediction
c^2 * N * t**-alpha / Gamma(1-alpha); the measured/predicted ratio is a
few-fold and drifts slowly with N (the prediction keeps only the leading
term of the inverse-survival moment), so the shape comparisons below
normalize it away.

Example:
    python3 scripts/variance_study.py --paths 2e5
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from fracwalk import engine
from fracwalk.engine import SolveRequest
from fracwalk.mlfun import gamma_fn
from fracwalk.problems import DiffusionSpec, build_diffusion_2d, variance_prediction


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,32,64", help="m values for the size sweep")
    ap.add_argument("--alphas", default="0.3,0.5,0.7", help="alpha values for the shape sweep")
    ap.add_argument("--alpha", type=float, default=0.5, help="alpha for the size sweep")
    ap.add_argument("--m", type=int, default=32, help="m for the shape sweep")
    ap.add_argument("--time", type=float, default=0.1)
    ap.add_argument("--paths", default="2e5", help="paths per measurement")
    ap.add_argument("--seed", type=int, default=1000)
    ap.add_argument("--out", type=Path, default=Path("results/variance.csv"))
    return ap.parse_args(argv)


def center_variance(m, alpha, t, n_paths, seed):
    spec = DiffusionSpec(m=m, alpha=alpha, t=t)
    bundle = build_diffusion_2d(spec)
    rep = engine.solve_entries(
        bundle.A, bundle.u0,
        SolveRequest(alpha=alpha, t=t, n_paths=n_paths, root_seed=seed,
                     entries=(spec.center_index,)))
    return float(rep.sample_variance[0])


def main(argv=None) -> int:
    args = parse_args(argv)
    n_paths = int(float(args.paths))
    sizes = [int(s) for s in args.sizes.split(",")]
    alphas = [float(s) for s in args.alphas.split(",")]
    strength = 1.0 / 4096.0
    rows = []

    print(f"size sweep: alpha={args.alpha}, t={args.time}, {n_paths} paths")
    variances = []
    for i, m in enumerate(sizes):
        t0 = time.perf_counter()
        var = center_variance(m, args.alpha, args.time, n_paths, args.seed + i)
        wall = time.perf_counter() - t0
        pred = variance_prediction(strength, m * m, args.alpha, args.time)
        variances.append(var)
        rows.append(("size", m, args.alpha, var, pred))
        print(f"  m={m:3d}  N={m * m:5d}  variance {var:.4e}  "
              f"predicted {pred:.4e}  ratio {var / pred:.2f}  [{wall:.1f} s]")
    n_vals = np.array([m * m for m in sizes], dtype=float)
    v_vals = np.array(variances)
    design = np.vstack([n_vals, np.ones_like(n_vals)]).T
    coef, residual, *_ = np.linalg.lstsq(design, v_vals, rcond=None)
    ss_res = float(residual[0]) if len(residual) else float(
        np.sum((v_vals - design @ coef) ** 2))
    r2 = 1.0 - ss_res / float(np.sum((v_vals - v_vals.mean()) ** 2))
    print(f"  linear fit in N: slope {coef[0]:.3e}, R^2 {r2:.5f}")

    print(f"shape sweep: m={args.m}, t={args.time}, {n_paths} paths")
    ratios = []
    for i, alpha in enumerate(alphas):
        var = center_variance(args.m, alpha, args.time, n_paths,
                              args.seed + 1000 + i)
        shape = args.time ** -alpha / gamma_fn(1.0 - alpha)
        pred = variance_prediction(strength, args.m * args.m, alpha, args.time)
        ratios.append(var / shape)
        rows.append(("alpha", args.m, alpha, var, pred))
        print(f"  alpha={alpha}  variance {var:.4e}  t^-a/Gamma(1-a) {shape:.3f}  "
              f"var/shape {var / shape:.4e}")
    print(f"  shape spread max/min: {max(ratios) / min(ratios):.3f} "
          f"(flat curve would give 1.0)")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("sweep,m,alpha,variance,predicted\n")
        for sweep, m, alpha, var, pred in rows:
            fh.write(f"{sweep},{m},{alpha},{var!r},{pred!r}\n")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
