"""Independent oracles: finite-difference gradients and exhaustive grid search.

These only use the objective itself (never the analytic gradient or an
optimizer), so they can be used to check both.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import core

DEFAULT_STEP = 1e-5
MAX_POINTS_PER_AXIS = 64
MAX_GRID_POINTS = 10**7


def finite_difference_gradient(problem, params, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central differences ``(f(x + h e_j) - f(x - h e_j)) / 2h`` per coordinate."""
    if not h > 0:
        raise core.ConfigurationError("finite-difference step h must be > 0")
    x = core.as_params(params, problem.dim)
    grad = np.empty(x.size)
    probe = x.copy()
    for j in range(x.size):
        probe[j] = x[j] + h
        fp = core.evaluate_full(problem, probe)
        probe[j] = x[j] - h
        fm = core.evaluate_full(problem, probe)
        probe[j] = x[j]
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise FloatingPointError(
                f"non-finite objective probing coordinate {j} at x[{j}] = {x[j]} +/- {h}")
        grad[j] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(a, b) -> np.ndarray:
    """``|a - b| / max(1, |a|, |b|)`` elementwise."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


@dataclass
class GradientCheckReport:
    max_relative_error: float
    max_absolute_error: float
    worst_coordinate: int
    worst_point: list[float]
    points_checked: int
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_gradient(problem, points: int = 20, seed: int = 0, h: float = DEFAULT_STEP,
                   threshold: float = 1e-5, low: float = -2.0, high: float = 2.0) -> GradientCheckReport:
    """Compare the analytic gradient with central differences at random points.

    Points are drawn uniformly from ``[low, high]^d`` with a generator seeded
    by ``seed``. Failures are reported, not raised.
    """
    rng = np.random.default_rng(seed)
    worst = (-1.0, 0, None)
    max_abs = 0.0
    for _ in range(points):
        x = rng.uniform(low, high, problem.dim)
        analytic = core.densify(core.gradient_full(problem, x))
        numeric = finite_difference_gradient(problem, x, h)
        rel = relative_error(analytic, numeric)
        max_abs = max(max_abs, float(np.max(np.abs(analytic - numeric))))
        j = int(np.argmax(rel))
        if rel[j] > worst[0]:
            worst = (float(rel[j]), j, x)
    err, j, x = worst
    return GradientCheckReport(
        max_relative_error=max(err, 0.0),
        max_absolute_error=max_abs,
        worst_coordinate=j,
        worst_point=[] if x is None else [float(v) for v in x],
        points_checked=points,
        threshold=threshold,
        passed=bool(err < threshold),
    )


def _axes(problem, lower, upper, resolution):
    d = problem.dim
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (d,))
    if not resolution > 0 or np.any(hi < lo):
        raise core.ConfigurationError("need resolution > 0 and upper >= lower")
    counts = np.floor((hi - lo) / resolution + 1e-9).astype(int) + 1
    total = int(np.prod(counts.astype(float)))
    if np.any(counts > MAX_POINTS_PER_AXIS) or total > MAX_GRID_POINTS:
        raise core.ConfigurationError(
            f"grid of {' x '.join(map(str, counts))} = {total:.3g} points exceeds the limits "
            f"({MAX_POINTS_PER_AXIS} per axis, {MAX_GRID_POINTS:.0e} total)")
    return [lo[i] + resolution * np.arange(counts[i]) for i in range(d)], total


def brute_force_grid_min(problem, lower, upper, resolution: float):
    """Exhaustively evaluate a regular grid; return ``(point, objective)``.

    Ties go to the lexicographically smallest point. Problems that define
    ``evaluate_points`` (an ``(m, d) -> (m,)`` vectorised objective) are
    evaluated through it in chunks; all others point by point.
    """
    axes, total = _axes(problem, lower, upper, resolution)
    best_f, best_x = math.inf, None
    vectorised = getattr(problem, "evaluate_points", None)
    if vectorised is not None:
        # grid points in lexicographic order, chunked along the first axis
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), -1).reshape(-1, len(axes) - 1) \
            if len(axes) > 1 else np.empty((1, 0))
        for v in axes[0]:
            block = np.column_stack([np.full(rest.shape[0], v), rest])
            values = np.asarray(vectorised(block), dtype=float)
            values = np.where(np.isnan(values), np.inf, values)
            k = int(np.argmin(values))
            if values[k] < best_f:
                best_f, best_x = float(values[k]), block[k].copy()
    else:
        for point in itertools.product(*axes):
            f = core.evaluate_full(problem, np.array(point))
            if f < best_f:
                best_f, best_x = f, np.array(point)
    if best_x is None:
        raise FloatingPointError(f"objective non-finite at all {total} grid points")
    return best_x, best_f
