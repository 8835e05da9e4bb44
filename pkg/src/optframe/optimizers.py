"""Optimizers.

Every optimizer is a small dataclass holding its hyperparameters and exposes
one entry point, :meth:`Optimizer.optimize`. Before touching the objective it
matches its ``requires`` capabilities against the problem (inserting
adapters where possible) and raises :class:`~optframe.core.CapabilityError`
otherwise.

Results carry the best point seen, its objective (always recomputed through
the full objective), a trace and the reason the run stopped.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional, Union

import numpy as np

from . import core
from .core import BatchRange, Capability as C, ConfigurationError, ContractViolation
from .policies import UpdatePolicy, initialize_policy

#: Objectives above this (or non-finite) count as divergence.
DIVERGENCE_LIMIT = 1e100

MAX_ITERATIONS = "max_iterations"
OBJECTIVE_TOLERANCE = "objective_tolerance"
GRADIENT_TOLERANCE = "gradient_tolerance"
STEP_TOLERANCE = "step_tolerance"
REJECTED = "rejected"
TERMINATION_REASONS = (MAX_ITERATIONS, OBJECTIVE_TOLERANCE, GRADIENT_TOLERANCE,
                       STEP_TOLERANCE, REJECTED)


@dataclass
class TerminationConfig:
    max_iterations: int = 100_000
    objective_tolerance: float = 1e-10
    gradient_tolerance: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        for key in ("objective_tolerance", "gradient_tolerance"):
            if not getattr(self, key) >= 0:
                raise ConfigurationError(f"{key} must be >= 0")


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    evaluations: int
    objective: float
    gradient_norm: float = math.nan
    elapsed: float = 0.0


@dataclass
class OptimizationResult:
    best_params: np.ndarray
    best_objective: float
    trace: list[TracePoint]
    termination_reason: str
    iterations: int = 0
    final_params: Optional[np.ndarray] = None
    warnings: list[str] = field(default_factory=list)

    @property
    def final_objective(self) -> float:
        return self.trace[-1].objective if self.trace else self.best_objective


def _diverged(f: float) -> bool:
    return not math.isfinite(f) or f > DIVERGENCE_LIMIT


class _Run:
    """Bookkeeping shared by all optimizers for one call to ``optimize``.

    Wraps the resolved problem view so every objective/gradient request is
    counted (in component functions touched), and keeps the trace and the
    best point.
    """

    def __init__(self, view, clock: Callable[[], float]):
        self.view = view
        self.clock = clock
        self.t0 = clock()
        self.evaluations = 0
        self.trace: list[TracePoint] = []
        self.best_x: np.ndarray | None = None
        self.best_f = math.inf
        self.warnings: list[str] = []
        caps = core.capabilities_of(view)
        self._full_cost = view.num_functions() if C.NUM_FUNCTIONS in caps else 1

    def objective(self, x) -> float:
        self.evaluations += self._full_cost
        return core.evaluate_full(self.view, x)

    def gradient(self, x) -> np.ndarray:
        self.evaluations += self._full_cost
        return core.densify(core.gradient_full(self.view, x))

    def batch_gradient(self, x, batch: BatchRange) -> np.ndarray:
        self.evaluations += batch.batch_size
        return core.densify(core.gradient_batch(self.view, x, batch))

    def partial_gradient(self, x, j: int) -> core.SparseGradient:
        self.evaluations += 1
        return core.partial_gradient(self.view, x, j)

    def offer(self, x: np.ndarray, f: float) -> None:
        if math.isfinite(f) and (self.best_x is None or f < self.best_f):
            self.best_x, self.best_f = x.copy(), f

    def record(self, iteration: int, f: float, gradient_norm: float = math.nan) -> None:
        if self.trace and self.trace[-1].iteration >= iteration:
            return
        self.trace.append(TracePoint(iteration, self.evaluations, float(f),
                                     float(gradient_norm), self.clock() - self.t0))

    def result(self, reason: str, iterations: int, x: np.ndarray) -> OptimizationResult:
        assert self.best_x is not None
        return OptimizationResult(self.best_x, self.best_f, self.trace, reason,
                                  iterations, x.copy(), self.warnings)


@dataclass
class Optimizer:
    """Base class. Subclasses set ``requires``/``name`` and implement ``_optimize``.

    ``callback(iteration, params)`` is invoked after every parameter update.
    ``clock`` supplies the timestamps written to the trace; pass a constant
    function for reproducible trace files.
    """

    requires: ClassVar[C] = C.FULL_EVALUATE
    name: ClassVar[str] = "optimizer"

    termination: TerminationConfig = field(default_factory=TerminationConfig, kw_only=True)
    trace_every: Optional[int] = field(default=None, kw_only=True)
    callback: Optional[Callable[[int, np.ndarray], None]] = field(
        default=None, kw_only=True, repr=False, compare=False)
    clock: Callable[[], float] = field(
        default=time.perf_counter, kw_only=True, repr=False, compare=False)

    def optimize(self, problem, initial_params) -> OptimizationResult:
        view = core.resolve(problem, self.requires, optimizer=self.name)
        x0 = core.as_params(initial_params, problem.dim)
        if not np.all(np.isfinite(x0)):
            raise ContractViolation("initial parameters must be finite")
        run = _Run(view, self.clock)
        f0 = run.objective(x0)
        if not math.isfinite(f0):
            raise ContractViolation(f"objective at the initial parameters is {f0}")
        run.offer(x0, f0)
        return self._optimize(run, x0.copy(), f0)

    def _optimize(self, run: _Run, x: np.ndarray, f: float) -> OptimizationResult:
        raise NotImplementedError

    def _notify(self, iteration: int, x: np.ndarray) -> None:
        if self.callback is not None:
            self.callback(iteration, x)

    def _traced(self, step: int) -> bool:
        return bool(self.trace_every) and step % self.trace_every == 0  # type: ignore[operator]


def optimize(optimizer: Optimizer, problem, initial_params) -> OptimizationResult:
    return optimizer.optimize(problem, initial_params)


# --------------------------------------------------------------------------


@dataclass
class GradientDescent(Optimizer):
    """Fixed-step descent ``x <- x - step_size * grad f(x)``."""

    requires: ClassVar[C] = C.FULL_EVALUATE | C.FULL_GRADIENT
    name: ClassVar[str] = "GradientDescent"

    step_size: float = 0.01

    def __post_init__(self):
        if not self.step_size > 0:
            raise ConfigurationError("step_size must be > 0")

    def _optimize(self, run, x, f):
        term = self.termination
        g = run.gradient(x)
        gnorm = float(np.linalg.norm(g))
        run.record(0, f, gnorm)
        if gnorm < term.gradient_tolerance:
            return run.result(GRADIENT_TOLERANCE, 0, x)
        reason = MAX_ITERATIONS
        it = 0
        for it in range(1, term.max_iterations + 1):
            x = x - self.step_size * g
            self._notify(it, x)
            f_new = run.objective(x)
            if _diverged(f_new):
                reason = REJECTED
                break
            run.offer(x, f_new)
            g = run.gradient(x)
            gnorm = float(np.linalg.norm(g))
            run.record(it, f_new, gnorm)
            if not np.all(np.isfinite(g)):
                reason = REJECTED
                break
            if gnorm < term.gradient_tolerance:
                reason = GRADIENT_TOLERANCE
                break
            if abs(f_new - f) < term.objective_tolerance:
                reason = OBJECTIVE_TOLERANCE
                break
            f = f_new
        return run.result(reason, it, x)


@dataclass(frozen=True)
class SGDRSchedule:
    """Cosine annealing with warm restarts.

    The step size decays from its base value towards ``min_step_size`` over
    ``period`` epochs, then restarts; each period is ``multiplier`` times
    longer than the previous one.
    """

    period: float = 10.0
    multiplier: float = 1.0
    min_step_size: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ConfigurationError("SGDR period must be > 0")
        if not self.multiplier >= 1:
            raise ConfigurationError("SGDR multiplier must be >= 1")

    def position(self, epochs: float) -> tuple[float, float]:
        """``(epochs since last restart, current period length)``."""
        if self.multiplier == 1.0:
            return math.fmod(epochs, self.period), self.period
        t, length = epochs, self.period
        while t >= length:
            t -= length
            length *= self.multiplier
        return t, length

    def step_size(self, base: float, epochs: float) -> float:
        t, length = self.position(epochs)
        return self.min_step_size + 0.5 * (base - self.min_step_size) * (1.0 + math.cos(math.pi * t / length))


@dataclass
class SGD(Optimizer):
    """Mini-batch stochastic gradient descent with a pluggable update policy.

    ``traversal="epoch"`` shuffles at the start of every epoch and walks the
    components in consecutive batches, the last one possibly shorter.
    ``traversal="modular"`` instead visits batch ``(i mod N, batch_size)`` at
    visit counter ``i`` and reshuffles whenever ``i mod N == 0``; it needs
    ``batch_size`` to divide ``N``.

    The update direction is the batch-summed gradient divided by the actual
    batch size. ``termination.max_iterations`` counts update steps. The full
    objective is evaluated at every epoch boundary, which is also where the
    objective tolerance and the best point are checked.
    """

    requires: ClassVar[C] = C.BATCH_EVALUATE | C.BATCH_GRADIENT | C.NUM_FUNCTIONS
    name: ClassVar[str] = "SGD"

    step_size: float = 0.01
    batch_size: int = 1
    policy: Union[str, UpdatePolicy] = "vanilla"
    policy_options: dict = field(default_factory=dict)
    restart: Optional[SGDRSchedule] = None
    traversal: str = "epoch"

    def __post_init__(self):
        if not self.step_size > 0:
            raise ConfigurationError("step_size must be > 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.traversal not in ("epoch", "modular"):
            raise ConfigurationError(f"unknown traversal {self.traversal!r}")

    def _make_policy(self, dim: int) -> UpdatePolicy:
        if isinstance(self.policy, UpdatePolicy):
            return self.policy
        return initialize_policy(self.policy, dim, self.policy_options)

    def _batches(self, n: int, bs: int) -> list[BatchRange]:
        if self.traversal == "epoch":
            return core.epoch_ranges(n, bs)
        if n % bs:
            raise ConfigurationError(
                f"modular traversal needs batch_size ({bs}) to divide num_functions ({n})")
        return [BatchRange(s, bs) for s in range(0, n, bs)]

    def _optimize(self, run, x, f):
        term = self.termination
        view = run.view
        n = core.num_functions(view)
        bs = self.batch_size
        if bs > n:
            run.warnings.append(f"batch_size {bs} exceeds num_functions {n}; clamped")
            bs = n
        batches = self._batches(n, bs)
        policy = self._make_policy(view.dim)
        rng = np.random.default_rng(term.seed)
        run.record(0, f)

        step = 0
        epoch = 0
        reason = MAX_ITERATIONS
        while step < term.max_iterations:
            core.shuffle(view, int(rng.integers(2**63)))
            for k, batch in enumerate(batches):
                lr = self.step_size
                if self.restart is not None:
                    lr = self.restart.step_size(lr, epoch + k / len(batches))
                g = run.batch_gradient(x, batch) / batch.batch_size
                x = policy.apply(x, lr, g)
                step += 1
                self._notify(step, x)
                if step == 1 or self._traced(step):
                    run.record(step, run.objective(x))
                if step >= term.max_iterations:
                    break
            else:
                epoch += 1
            f_new = run.objective(x)
            if _diverged(f_new):
                reason = REJECTED
                break
            run.offer(x, f_new)
            run.record(step, f_new)
            if abs(f_new - f) < term.objective_tolerance:
                reason = OBJECTIVE_TOLERANCE
                break
            f = f_new
        run.warnings.extend(policy.warnings)
        return run.result(reason, step, x)


@dataclass
class SCD(Optimizer):
    """Stochastic coordinate descent on partial gradients.

    Each step picks a feature ``j`` (cyclically or uniformly at random) and
    moves only the coordinates present in ``partial_gradient(x, j)``. The
    full objective is checked once per pass of ``num_features`` steps.
    """

    requires: ClassVar[C] = C.PARTIAL_GRADIENT | C.NUM_FEATURES | C.FULL_EVALUATE
    name: ClassVar[str] = "SCD"

    step_size: float = 0.01
    coordinate_order: str = "cyclic"

    def __post_init__(self):
        if not self.step_size > 0:
            raise ConfigurationError("step_size must be > 0")
        if self.coordinate_order not in ("cyclic", "random"):
            raise ConfigurationError(f"unknown coordinate_order {self.coordinate_order!r}")

    def _optimize(self, run, x, f):
        term = self.termination
        nf = core.num_features(run.view)
        rng = np.random.default_rng(term.seed)
        run.record(0, f)
        reason = MAX_ITERATIONS
        it = 0
        for it in range(1, term.max_iterations + 1):
            j = (it - 1) % nf if self.coordinate_order == "cyclic" else int(rng.integers(nf))
            sg = run.partial_gradient(x, j)
            if np.all(np.isfinite(sg.values)):
                x = x.copy()
                x[sg.indices] -= self.step_size * sg.values
            else:
                run.warnings.append(f"step {it}: non-finite partial gradient, step rejected")
            self._notify(it, x)
            if it % nf and it != term.max_iterations and not self._traced(it):
                continue
            f_new = run.objective(x)
            if _diverged(f_new):
                reason = REJECTED
                break
            run.offer(x, f_new)
            run.record(it, f_new)
            if it % nf == 0:
                if abs(f_new - f) < term.objective_tolerance:
                    reason = OBJECTIVE_TOLERANCE
                    break
                f = f_new
        return run.result(reason, it, x)


@dataclass
class LBFGS(Optimizer):
    """Limited-memory BFGS with a backtracking Armijo line search.

    Curvature pairs with ``s.y <= 1e-12 |s| |y|`` are dropped, which keeps the
    implicit inverse Hessian positive definite without a Wolfe search.
    Dropping a pair also clears the memory: without a curvature condition
    the remaining pairs can go stale and pin the iteration to the same short
    step indefinitely (Rosenbrock's valley does exactly this). The next
    iteration then starts again from a backtracked steepest-descent step.
    """

    requires: ClassVar[C] = C.FULL_EVALUATE | C.FULL_GRADIENT
    name: ClassVar[str] = "L-BFGS"

    memory: int = 10
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 20
    initial_step: float = 1.0

    def __post_init__(self):
        if self.memory < 1:
            raise ConfigurationError("memory must be >= 1")
        if not 0 < self.armijo < 1:
            raise ConfigurationError("armijo constant must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ConfigurationError("backtrack factor must lie in (0, 1)")

    @staticmethod
    def two_loop(g: np.ndarray, pairs) -> np.ndarray:
        """Apply the inverse-Hessian approximation built from ``pairs`` to ``g``."""
        q = g.copy()
        saved = []
        for s, y in reversed(pairs):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            q -= a * y
            saved.append((rho, a))
        if pairs:
            s, y = pairs[-1]
            q *= (s @ y) / (y @ y)
        for (s, y), (rho, a) in zip(pairs, reversed(saved)):
            b = rho * (y @ q)
            q += (a - b) * s
        return q

    def _optimize(self, run, x, f):
        term = self.termination
        pairs: deque = deque(maxlen=self.memory)
        g = run.gradient(x)
        gnorm = float(np.linalg.norm(g))
        run.record(0, f, gnorm)
        if gnorm < term.gradient_tolerance:
            return run.result(GRADIENT_TOLERANCE, 0, x)
        reason = MAX_ITERATIONS
        it = 0
        for it in range(1, term.max_iterations + 1):
            d = -self.two_loop(g, list(pairs))
            slope = float(g @ d)
            if not slope < 0:
                pairs.clear()
                d = -g
                slope = -float(g @ g)
            alpha = self.initial_step
            accepted = False
            for _ in range(self.max_backtracks + 1):
                x_new = x + alpha * d
                f_new = run.objective(x_new)
                if math.isfinite(f_new) and f_new <= f + self.armijo * alpha * slope:
                    accepted = True
                    break
                alpha *= self.backtrack
            if not accepted:
                reason = STEP_TOLERANCE
                break
            g_new = run.gradient(x_new)
            s, y = x_new - x, g_new - g
            if s @ y > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                pairs.append((s, y))
            else:
                pairs.clear()
            change = abs(f - f_new)
            x, f, g = x_new, f_new, g_new
            gnorm = float(np.linalg.norm(g))
            run.offer(x, f)
            run.record(it, f, gnorm)
            self._notify(it, x)
            if not np.all(np.isfinite(g)):
                reason = REJECTED
                break
            if gnorm < term.gradient_tolerance:
                reason = GRADIENT_TOLERANCE
                break
            if change < term.objective_tolerance:
                reason = OBJECTIVE_TOLERANCE
                break
        return run.result(reason, it, x)


@dataclass(frozen=True)
class AnnealingSchedule:
    initial_temperature: float = 10.0
    cooling: float = 0.95
    moves_per_temperature: int = 50
    move_scale: float = 0.5

    def __post_init__(self):
        if not self.initial_temperature > 0:
            raise ConfigurationError("initial_temperature must be > 0")
        if not 0 < self.cooling < 1:
            raise ConfigurationError("cooling must lie in (0, 1)")
        if self.moves_per_temperature < 1:
            raise ConfigurationError("moves_per_temperature must be >= 1")
        if not self.move_scale > 0:
            raise ConfigurationError("move_scale must be > 0")


@dataclass
class SimulatedAnnealing(Optimizer):
    """Metropolis random walk with geometric cooling; needs only ``evaluate``.

    ``termination.max_iterations`` counts proposals. Proposals with a
    non-finite (or divergent) objective are rejected. The tolerances do not
    apply, since rejected moves leave the objective unchanged.
    """

    requires: ClassVar[C] = C.FULL_EVALUATE
    name: ClassVar[str] = "SimulatedAnnealing"

    schedule: AnnealingSchedule = field(default_factory=AnnealingSchedule)

    def _optimize(self, run, x, f):
        term = self.termination
        sched = self.schedule
        rng = np.random.default_rng(term.seed)
        temperature = sched.initial_temperature
        run.record(0, f)
        it = 0
        for it in range(1, term.max_iterations + 1):
            proposal = x + sched.move_scale * rng.standard_normal(x.size)
            fp = run.objective(proposal)
            if not _diverged(fp) and self._accept(fp - f, temperature, rng):
                x, f = proposal, fp
                run.offer(x, f)
            self._notify(it, x)
            if it % sched.moves_per_temperature == 0:
                temperature *= sched.cooling
                run.record(it, f)
            elif self._traced(it) or it == term.max_iterations:
                run.record(it, f)
        return run.result(MAX_ITERATIONS, it, x)

    @staticmethod
    def _accept(delta: float, temperature: float, rng) -> bool:
        if delta < 0:
            return True
        u = rng.random()
        if temperature <= 0:
            return delta == 0
        return u < math.exp(-delta / temperature)


# --------------------------------------------------------------------------
# functional forms
#
# The problem annotations let a static type checker reject a problem that
# lacks the required methods at the call site.

Differentiable = Union[core.HasGradient, core.HasBatchGradient]


def optimize_gradient_descent(problem: Differentiable, x0, step_size: float,
                              term: TerminationConfig | None = None, **kw) -> OptimizationResult:
    opt = GradientDescent(step_size, termination=term or TerminationConfig(), **kw)
    return opt.optimize(problem, x0)


def optimize_sgd(problem: Differentiable, x0, step_size: float, batch_size: int = 1,
                 term: TerminationConfig | None = None,
                 policy: Union[str, UpdatePolicy] = "vanilla",
                 restart: SGDRSchedule | None = None, **kw) -> OptimizationResult:
    opt = SGD(step_size, batch_size, policy, restart=restart,
              termination=term or TerminationConfig(), **kw)
    return opt.optimize(problem, x0)


def optimize_scd(problem: core.HasPartialGradient, x0, step_size: float,
                 term: TerminationConfig | None = None,
                 coordinate_order: str = "cyclic", **kw) -> OptimizationResult:
    opt = SCD(step_size, coordinate_order, termination=term or TerminationConfig(), **kw)
    return opt.optimize(problem, x0)


def optimize_lbfgs(problem: Differentiable, x0, memory: int = 10,
                   term: TerminationConfig | None = None, **kw) -> OptimizationResult:
    return LBFGS(memory, termination=term or TerminationConfig(), **kw).optimize(problem, x0)


def optimize_simulated_annealing(problem: Union[core.HasEvaluate, core.HasBatchEvaluate], x0,
                                 schedule: AnnealingSchedule | None = None,
                                 term: TerminationConfig | None = None, **kw) -> OptimizationResult:
    opt = SimulatedAnnealing(schedule or AnnealingSchedule(),
                             termination=term or TerminationConfig(), **kw)
    return opt.optimize(problem, x0)


OPTIMIZERS: dict[str, type[Optimizer]] = {
    "gd": GradientDescent,
    "sgd": SGD,
    "scd": SCD,
    "lbfgs": LBFGS,
    "sa": SimulatedAnnealing,
}
