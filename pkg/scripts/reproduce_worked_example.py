"""Reproduce the four-quadratic worked example.

Runs plain SGD (step 0.02, batch 1, 5000 steps) with the modular traversal
that reshuffles every N visits, and cross-checks the answer against the
exhaustive grid search and L-BFGS.
"""
import argparse
import time

import numpy as np

from optframe import (LBFGS, SGD, TerminationConfig, brute_force_grid_min,
                      make_four_quadratics)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--traversal", choices=("modular", "epoch"), default="modular")
    args = p.parse_args(argv)

    term = TerminationConfig(args.steps, objective_tolerance=0.0, gradient_tolerance=0.0,
                             seed=args.seed)
    t0 = time.perf_counter()
    result = SGD(0.02, 1, "vanilla", traversal=args.traversal, termination=term).optimize(
        make_four_quadratics(), np.zeros(4))
    elapsed = time.perf_counter() - t0
    print(f"objective: {result.best_objective:.6f}")
    print(f"  parameters {np.round(result.best_params, 8).tolist()}  "
          f"({result.iterations} steps, {elapsed * 1e3:.1f} ms)")

    point, value = brute_force_grid_min(make_four_quadratics(), -10, 10, 0.5)
    print(f"grid search:  {value} at {point.tolist()}")
    lb = LBFGS().optimize(make_four_quadratics(), np.zeros(4))
    print(f"L-BFGS:       {lb.best_objective:.12f} after {lb.iterations} iterations")
    return 0 if abs(result.best_objective - 123.75) <= 1e-6 else 1


if __name__ == "__main__":
    raise SystemExit(main())
