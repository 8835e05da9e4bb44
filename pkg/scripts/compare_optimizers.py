"""Run every optimizer on every problem it can handle and print a table.

Pairs the capability check rejects are listed with the missing method
instead of being run. ``--out DIR`` also writes one trace CSV per pair.
"""
import argparse
from pathlib import Path

import numpy as np

from optframe import bench, core
from optframe.bench import ExperimentSpec

# per-optimizer settings that work across the problem set
SETTINGS = {
    "gd": dict(lr=0.01, iters=5000),
    "sgd": dict(lr=0.02, batch=4, policy="adam", iters=20000),
    "scd": dict(lr=0.1, iters=5000),
    "lbfgs": dict(iters=500),
    "sa": dict(iters=20000, move_scale=0.2),
}
PROBLEMS = ["four_quadratics", "sphere", "rosenbrock", "sparse_quadratic",
            "logistic_regression", "nogradient_toy"]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)
    args = p.parse_args(argv)

    print(f"{'problem':<20} {'optimizer':<7} {'best objective':>22} {'iters':>7} {'evals':>9}  reason")
    for problem in PROBLEMS:
        for name, opts in SETTINGS.items():
            x0 = "-1.2,1" if problem == "rosenbrock" else "ones"
            out = str(args.out / f"{problem}-{name}") if args.out else None
            spec = ExperimentSpec(problem, name, seed=args.seed, reps=args.reps, x0=x0,
                                  timing=False, out=out, **opts)
            try:
                summary = bench.run_experiment(spec)
            except bench.BenchError as exc:
                missing = [ln.split("(")[0].replace("missing", "").strip()
                           for ln in str(exc).splitlines()[1:]]
                print(f"{problem:<20} {name:<7} {'-':>22} {'':>7} {'':>9}  needs {', '.join(missing)}")
                continue
            rep = summary["repetitions"][0]
            best = float(np.min([r["best_objective"] for r in summary["repetitions"]]))
            print(f"{problem:<20} {name:<7} {best:>22.12g} {rep['iterations']:>7} "
                  f"{rep['evaluations']:>9}  {rep['termination_reason']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
