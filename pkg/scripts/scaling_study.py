#!/usr/bin/env python3
"""Cost-scaling study: how total event count grows with t, size, and workers.

Simulation cost is proportional to the number of sojourn events, which
should scale like n_paths * N * t**alpha.  This script fits log-log
slopes for a time sweep (expected slope: alpha) and a size sweep
(expected slope: 1), and optionally measures wall-clock speedup over a
worker ladder.

Example:
    python3 scripts/scaling_study.py --workers-list 1,2,4,8
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from fracwalk import engine
from fracwalk.engine import SolveRequest
from fracwalk.problems import DiffusionSpec, build_diffusion_2d


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--time", type=float, default=0.1)
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--times", default="0.05,0.1,0.2,0.4", help="time sweep values")
    ap.add_argument("--sizes", default="8,16,32", help="m values for the size sweep")
    ap.add_argument("--workers-list", default="", help="worker ladder (empty: skip)")
    ap.add_argument("--paths", default="2e4", help="paths per run")
    ap.add_argument("--seed", type=int, default=5000)
    ap.add_argument("--out", type=Path, default=Path("results/scaling.csv"))
    return ap.parse_args(argv)


def run(bundle, alpha, t, n_paths, seed, workers=1):
    t0 = time.perf_counter()
    rep = engine.solve_full(
        bundle.A, bundle.u0,
        SolveRequest(alpha=alpha, t=t, n_paths=n_paths, root_seed=seed,
                     workers=workers))
    return rep, time.perf_counter() - t0


def main(argv=None) -> int:
    args = parse_args(argv)
    n_paths = int(float(args.paths))
    rows = []

    ts = [float(s) for s in args.times.split(",")]
    bundle = build_diffusion_2d(DiffusionSpec(m=args.m))
    print(f"time sweep: m={args.m}, alpha={args.alpha}, {n_paths} paths")
    events = []
    for k, t in enumerate(ts):
        rep, wall = run(bundle, args.alpha, t, n_paths, args.seed + k)
        events.append(rep.total_events)
        rows.append(("time", t, rep.total_events, wall))
        print(f"  t={t:<5g} events {rep.total_events:>12d}  [{wall:.2f} s]")
    slope = float(np.polyfit(np.log(ts), np.log(events), 1)[0])
    print(f"  slope {slope:.3f} (expected about alpha = {args.alpha})")

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"size sweep: alpha={args.alpha}, t={args.time}, {n_paths} paths")
    events = []
    for k, m in enumerate(sizes):
        b = build_diffusion_2d(DiffusionSpec(m=m))
        rep, wall = run(b, args.alpha, args.time, n_paths, args.seed + 100 + k)
        events.append(rep.total_events)
        rows.append(("size", m * m, rep.total_events, wall))
        print(f"  m={m:3d} N={m * m:5d} events {rep.total_events:>12d}  [{wall:.2f} s]")
    slope = float(np.polyfit(np.log([m * m for m in sizes]), np.log(events), 1)[0])
    print(f"  slope {slope:.3f} (expected about 1)")

    if args.workers_list:
        workers = [int(s) for s in args.workers_list.split(",")]
        print(f"worker sweep: m={args.m}, alpha={args.alpha}, {n_paths} paths "
              f"(identical seeds -> identical estimates)")
        base = None
        for w in workers:
            rep, wall = run(bundle, args.alpha, args.time, n_paths,
                            args.seed, workers=w)
            base = base or wall
            rows.append(("workers", w, rep.total_events, wall))
            print(f"  workers={w:2d}  wall {wall:.2f} s  speedup {base / wall:.2f}x")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("sweep,value,total_events,wall_time_s\n")
        for sweep, value, ev, wall in rows:
            fh.write(f"{sweep},{value},{ev},{wall!r}\n")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
