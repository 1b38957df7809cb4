"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--roots 20]

Each row reports the best wall time over the repeats for both backends and
the speedup.  Results from the two backends are also compared for equality.
"""

import argparse
import sys
import time

import numpy as np

from bps import _pykernels as pure
from bps._backend import BACKEND, kernels
from bps.harness import sample_eligible
from bps.oracle import build_distance_table
from bps.phe import PheModel, calibrate_full, calibrate_transition, manhattan_table


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, (list, np.ndarray)):
        return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=0, atol=1e-12)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--roots", type=int, default=20, help="root states per tree benchmark")
    ap.add_argument("--horizon", type=int, default=8)
    args = ap.parse_args(argv)

    if BACKEND != "cython":
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1

    table = build_distance_table()
    md = manhattan_table()
    phe = PheModel.from_counts(calibrate_full(table, md))
    trans = calibrate_transition(table).p
    roots = [s.cells for s in sample_eligible(table, args.horizon, args.roots, seed=0)]
    goal = table.goal_rank
    trees = [kernels.build_tree(r, args.horizon, goal, True) for r in roots]
    liks = [phe.evidence(md.values[t[3]]) for t in trees]

    cases = {
        "bfs_distances": lambda k: k.bfs_distances(table.goal.cells),
        "build_tree": lambda k: [k.build_tree(r, args.horizon, goal, True) for r in roots],
        "minimin_scores": lambda k: [k.minimin_scores(r, args.horizon, md.values, goal, True) for r in roots],
        "collect": lambda k: [k.collect(t[1], lik, trans) for t, lik in zip(trees, liks)],
    }
    print(f"horizon={args.horizon} roots={args.roots} mean_nodes={np.mean([len(t[0]) for t in trees]):.0f}")
    print(f"{'kernel':16s} {'python_s':>10s} {'cython_s':>10s} {'speedup':>8s}  agree")
    for name, fn in cases.items():
        tp, outp = best_of(lambda: fn(pure), args.repeat)
        tc, outc = best_of(lambda: fn(kernels), args.repeat)
        agree = all(same(a, b) for a, b in zip(outp, outc)) if isinstance(outp, list) else same(outp, outc)
        print(f"{name:16s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}  {agree}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
