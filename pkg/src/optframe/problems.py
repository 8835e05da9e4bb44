"""Reference objective functions covering each capability combination."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import Capability as C
from .core import Problem, SparseGradient


class InputError(ValueError):
    """Bad data handed to a problem constructor."""


def _permutation(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


class FourQuadratics(Problem):
    """Four independent parabolas, one per coordinate.

    ``f(x) = sum_i x_i**2 + b_i * x_i + c_i`` with ``c = (20, 12, 15, 100)``
    and ``b = (-4, -2, -3, -8)``. Component ``i`` only involves coordinate
    ``i``; the minimum 123.75 is attained at ``(2, 1, 1.5, 4)``.
    """

    capabilities = (C.BATCH_EVALUATE | C.BATCH_GRADIENT | C.PARTIAL_GRADIENT
                    | C.NUM_FUNCTIONS | C.NUM_FEATURES | C.SHUFFLE)
    name = "four_quadratics"
    dim = 4

    def __init__(self):
        self.intercepts = np.array([20.0, 12.0, 15.0, 100.0])
        self.coefficients = np.array([-4.0, -2.0, -3.0, -8.0])
        self.ord = np.arange(4)

    def num_functions(self) -> int:
        return 4

    def num_features(self) -> int:
        return 4

    def shuffle(self, seed: int) -> None:
        self.ord = _permutation(4, seed)

    def evaluate_batch(self, params, start, batch_size) -> float:
        x = self._params(params)
        batch = self._range(start, batch_size)
        cost = 0.0
        for o in self.ord[batch.start:batch.stop]:
            cost += x[o] * x[o] + self.coefficients[o] * x[o] + self.intercepts[o]
        return float(cost)

    def gradient_batch(self, params, start, batch_size) -> np.ndarray:
        x = self._params(params)
        batch = self._range(start, batch_size)
        g = np.zeros(4)
        for o in self.ord[batch.start:batch.stop]:
            g[o] += 2.0 * x[o] + self.coefficients[o]
        return g

    def partial_gradient(self, params, j) -> SparseGradient:
        x = self._params(params)
        return SparseGradient.from_pairs({j: 2.0 * x[j] + self.coefficients[j]}, 4)

    def evaluate_points(self, points: np.ndarray) -> np.ndarray:
        """Vectorised full objective for an ``(m, 4)`` array of points."""
        X = np.asarray(points, dtype=np.float64)
        return (X * X + self.coefficients * X + self.intercepts).sum(axis=1)


class Sphere(Problem):
    capabilities = C.FULL_EVALUATE | C.FULL_GRADIENT | C.PARTIAL_GRADIENT | C.NUM_FEATURES
    name = "sphere"

    def __init__(self, dim: int = 2):
        if dim < 1:
            raise InputError("sphere dimension must be >= 1")
        self.dim = int(dim)

    def num_features(self) -> int:
        return self.dim

    def evaluate(self, params) -> float:
        x = self._params(params)
        return float(x @ x)

    def gradient(self, params) -> np.ndarray:
        return 2.0 * self._params(params)

    def partial_gradient(self, params, j) -> SparseGradient:
        x = self._params(params)
        return SparseGradient.from_pairs({j: 2.0 * x[j]}, self.dim)

    def evaluate_points(self, points: np.ndarray) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        return (X * X).sum(axis=1)


class Rosenbrock(Problem):
    """``(1 - x)**2 + 100 (y - x**2)**2``, minimum 0 at ``(1, 1)``."""

    capabilities = C.FULL_EVALUATE | C.FULL_GRADIENT
    name = "rosenbrock"
    dim = 2

    def evaluate(self, params) -> float:
        x, y = self._params(params)
        return float((1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2)

    def gradient(self, params) -> np.ndarray:
        x, y = self._params(params)
        r = y - x * x
        return np.array([-2.0 * (1.0 - x) - 400.0 * x * r, 200.0 * r])

    def evaluate_points(self, points: np.ndarray) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        x, y = X[:, 0], X[:, 1]
        return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2


class SparseQuadratic(Problem):
    """Diagonal quadratic split into ``dim`` components with sparse gradients.

    Component ``i`` is ``sum_{j in S_i} (a_j / k) x_j**2`` where ``S_i`` holds
    the ``k`` cyclically consecutive coordinates starting at ``i``. Each
    coordinate lies in exactly ``k`` supports, so the total is
    ``sum_j a_j x_j**2``.
    """

    capabilities = (C.BATCH_EVALUATE | C.BATCH_GRADIENT | C.NUM_FUNCTIONS | C.SHUFFLE
                    | C.PARTIAL_GRADIENT | C.NUM_FEATURES | C.SPARSE_GRADIENT)
    name = "sparse_quadratic"

    def __init__(self, a, k: int = 1):
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        if a.size < 1 or not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise InputError("sparse_quadratic coefficients must be finite and > 0")
        if not 1 <= k <= a.size:
            raise InputError(f"active-set size k must lie in [1, {a.size}]")
        self.a = a
        self.k = int(k)
        self.dim = a.size
        self.ord = np.arange(self.dim)

    def support(self, i: int) -> np.ndarray:
        return np.sort((i + np.arange(self.k)) % self.dim)

    def num_functions(self) -> int:
        return self.dim

    def num_features(self) -> int:
        return self.dim

    def shuffle(self, seed: int) -> None:
        self.ord = _permutation(self.dim, seed)

    def evaluate_batch(self, params, start, batch_size) -> float:
        x = self._params(params)
        batch = self._range(start, batch_size)
        total = 0.0
        for i in self.ord[batch.start:batch.stop]:
            s = self.support(i)
            total += float(np.sum(self.a[s] / self.k * x[s] ** 2))
        return total

    def gradient_batch(self, params, start, batch_size, sparse: bool = False):
        x = self._params(params)
        batch = self._range(start, batch_size)
        g = np.zeros(self.dim)
        touched = set()
        for i in self.ord[batch.start:batch.stop]:
            s = self.support(i)
            g[s] += 2.0 * self.a[s] / self.k * x[s]
            touched.update(int(j) for j in s)
        if not sparse:
            return g
        idx = np.array(sorted(touched), dtype=np.int64)
        return SparseGradient(idx, g[idx], self.dim)

    def partial_gradient(self, params, j) -> SparseGradient:
        x = self._params(params)
        return SparseGradient.from_pairs({j: 2.0 * self.a[j] * x[j]}, self.dim)


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # branch on sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticRegression(Problem):
    """Unregularised negative log-likelihood of a logistic model.

    Parameters are ``d`` weights followed by a bias. One component per data
    point; the per-point loss is ``log(1 + exp(z)) - y * z`` with
    ``z = w . x + b``.
    """

    capabilities = C.BATCH_EVALUATE | C.BATCH_GRADIENT | C.NUM_FUNCTIONS | C.SHUFFLE | C.NUM_FEATURES
    name = "logistic_regression"

    def __init__(self, data, labels):
        X = np.asarray(data, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(labels, dtype=np.float64).reshape(-1)
        if X.shape[0] < 1:
            raise InputError("logistic regression needs at least one data point")
        if X.shape[0] != y.size:
            raise InputError(f"{X.shape[0]} data rows but {y.size} labels")
        if not np.all(np.isfinite(X)):
            raise InputError("data contains non-finite entries")
        if not np.all((y == 0) | (y == 1)):
            raise InputError("labels must be 0 or 1")
        self.data = X
        self.labels = y
        self.dim = X.shape[1] + 1
        self.ord = np.arange(X.shape[0])

    def num_functions(self) -> int:
        return self.data.shape[0]

    def num_features(self) -> int:
        return self.dim

    def shuffle(self, seed: int) -> None:
        self.ord = _permutation(self.data.shape[0], seed)

    def _margins(self, x, start, batch_size):
        batch = self._range(start, batch_size)
        rows = self.ord[batch.start:batch.stop]
        X, y = self.data[rows], self.labels[rows]
        return X, y, X @ x[:-1] + x[-1]

    def evaluate_batch(self, params, start, batch_size) -> float:
        x = self._params(params)
        _, y, z = self._margins(x, start, batch_size)
        return float(np.sum(_softplus(z) - y * z))

    def gradient_batch(self, params, start, batch_size) -> np.ndarray:
        x = self._params(params)
        X, y, z = self._margins(x, start, batch_size)
        r = _sigmoid(z) - y
        return np.concatenate([X.T @ r, [r.sum()]])


class NoGradientToy(Problem):
    """Evaluate-only shifted bowl ``sum (x_i - 1)**2``; has no gradient method."""

    capabilities = C.FULL_EVALUATE
    name = "nogradient_toy"

    def __init__(self, dim: int = 2):
        self.dim = int(dim)

    def evaluate(self, params) -> float:
        x = self._params(params)
        return float(np.sum((x - 1.0) ** 2))


def make_four_quadratics() -> FourQuadratics:
    return FourQuadratics()


def make_sphere(d: int = 2) -> Sphere:
    return Sphere(d)


def make_rosenbrock() -> Rosenbrock:
    return Rosenbrock()


def make_sparse_quadratic(a, k: int = 1) -> SparseQuadratic:
    return SparseQuadratic(a, k)


def make_logistic_regression(data, labels) -> LogisticRegression:
    return LogisticRegression(data, labels)


def synthetic_logistic(n: int = 100, d: int = 3, seed: int = 0) -> LogisticRegression:
    """Gaussian features with labels drawn from a random logistic model."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    w = rng.standard_normal(d)
    p = _sigmoid(X @ w + 0.5)
    y = (rng.random(n) < p).astype(np.float64)
    return LogisticRegression(X, y)


def load_logistic_csv(path, header: bool = False) -> LogisticRegression:
    """Read ``features..., label`` rows from a comma-separated file."""
    path = Path(path)
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0,
                           dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if table.shape[1] < 2:
        raise InputError(f"{path}: need at least one feature column and a label column")
    return LogisticRegression(table[:, :-1], table[:, -1])


def make_problem(name: str, *, dim: int | None = None, seed: int = 0,
                 data: str | None = None, header: bool = False,
                 n: int = 100):
    """Build a registered problem by name."""
    if name == "four_quadratics":
        return FourQuadratics()
    if name == "sphere":
        return Sphere(dim or 2)
    if name == "rosenbrock":
        return Rosenbrock()
    if name == "sparse_quadratic":
        d = dim or 8
        return SparseQuadratic(np.linspace(1.0, 2.0, d), k=min(2, d))
    if name == "logistic_regression":
        if data is not None:
            return load_logistic_csv(data, header=header)
        return synthetic_logistic(n=n, d=dim or 3, seed=seed)
    if name == "nogradient_toy":
        return NoGradientToy(dim or 2)
    raise KeyError(name)


PROBLEMS = ("four_quadratics", "sphere", "rosenbrock", "sparse_quadratic",
            "logistic_regression", "nogradient_toy")

FOUR_QUADRATICS_MINIMIZER = np.array([2.0, 1.0, 1.5, 4.0])
FOUR_QUADRATICS_MINIMUM = 123.75

