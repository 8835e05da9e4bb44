"""Objective-function contract, capability taxonomy and adapters.

An objective function ("problem") is any object exposing some subset of the
contract methods below, together with a ``capabilities`` attribute listing
which ones it provides and a ``dim`` attribute giving the parameter dimension.

========================  ==============================================
capability                method
========================  ==============================================
``FULL_EVALUATE``         ``evaluate(params) -> float``
``BATCH_EVALUATE``        ``evaluate_batch(params, start, batch_size) -> float``
``FULL_GRADIENT``         ``gradient(params) -> ndarray``
``BATCH_GRADIENT``        ``gradient_batch(params, start, batch_size) -> ndarray``
``PARTIAL_GRADIENT``      ``partial_gradient(params, j) -> SparseGradient``
``NUM_FUNCTIONS``         ``num_functions() -> int``
``NUM_FEATURES``          ``num_features() -> int``
``SHUFFLE``               ``shuffle(seed) -> None``
``SPARSE_GRADIENT``       gradient methods accept ``sparse=True``
========================  ==============================================

Batch methods return the *sum* over the components ``start .. start +
batch_size - 1`` in the problem's current ordering. Any averaging is left to
the optimizer.

Optimizers never call these methods directly. They go through the module
level functions (:func:`evaluate_full`, :func:`gradient_batch`, ...) or a view
returned by :func:`resolve`, which insert the separable <-> full adapters when
a capability is reachable only through one.
"""
from __future__ import annotations

import enum
import inspect
from dataclasses import dataclass
from typing import Any, ClassVar, NamedTuple, Protocol, Union, runtime_checkable

import numpy as np


class ContractViolation(ValueError):
    """A contract method was called with arguments outside its domain."""


class CapabilityError(TypeError):
    """A problem lacks a method that the caller requires."""


class ConfigurationError(ValueError):
    """Invalid optimizer or policy configuration."""


class Capability(enum.Flag):
    NONE = 0
    FULL_EVALUATE = enum.auto()
    BATCH_EVALUATE = enum.auto()
    FULL_GRADIENT = enum.auto()
    BATCH_GRADIENT = enum.auto()
    PARTIAL_GRADIENT = enum.auto()
    NUM_FUNCTIONS = enum.auto()
    NUM_FEATURES = enum.auto()
    SHUFFLE = enum.auto()
    SPARSE_GRADIENT = enum.auto()


#: The flag type used for both "what a problem has" and "what an optimizer needs".
CapabilitySet = Capability

SEPARABLE = Capability.BATCH_EVALUATE | Capability.NUM_FUNCTIONS | Capability.SHUFFLE
DIFFERENTIABLE = Capability.FULL_EVALUATE | Capability.FULL_GRADIENT


class _MethodInfo(NamedTuple):
    attribute: str | None
    name: str
    signature: str


METHODS: dict[Capability, _MethodInfo] = {
    Capability.FULL_EVALUATE: _MethodInfo(
        "evaluate", "Evaluate", "evaluate(params) -> float, the objective at params"),
    Capability.BATCH_EVALUATE: _MethodInfo(
        "evaluate_batch", "Evaluate",
        "evaluate_batch(params, start, batch_size) -> float, the sum of "
        "batch_size component objectives beginning at component start"),
    Capability.FULL_GRADIENT: _MethodInfo(
        "gradient", "Gradient", "gradient(params) -> ndarray of shape (dim,)"),
    Capability.BATCH_GRADIENT: _MethodInfo(
        "gradient_batch", "Gradient",
        "gradient_batch(params, start, batch_size) -> ndarray, the summed "
        "gradient of the same components as evaluate_batch"),
    Capability.PARTIAL_GRADIENT: _MethodInfo(
        "partial_gradient", "PartialGradient",
        "partial_gradient(params, j) -> SparseGradient for feature j"),
    Capability.NUM_FUNCTIONS: _MethodInfo(
        "num_functions", "NumFunctions", "num_functions() -> int, the number of components"),
    Capability.NUM_FEATURES: _MethodInfo(
        "num_features", "NumFeatures", "num_features() -> int, the number of partial derivatives"),
    Capability.SHUFFLE: _MethodInfo(
        "shuffle", "Shuffle", "shuffle(seed) -> None, reorders the components"),
    Capability.SPARSE_GRADIENT: _MethodInfo(
        None, "sparse Gradient", "gradient methods accepting the keyword sparse=True"),
}


def members(caps: Capability) -> list[Capability]:
    """Single flags contained in ``caps``, in declaration order."""
    return [c for c in Capability if c.value and c in caps]


def validate_capabilities(caps: Capability) -> None:
    """Raise :class:`ContractViolation` if ``caps`` is internally inconsistent."""
    rules = [
        (Capability.BATCH_EVALUATE, Capability.NUM_FUNCTIONS),
        (Capability.BATCH_GRADIENT, Capability.BATCH_EVALUATE),
        (Capability.PARTIAL_GRADIENT, Capability.NUM_FEATURES),
    ]
    for have, needs in rules:
        if have in caps and needs not in caps:
            raise ContractViolation(
                f"capability {have.name} requires {needs.name} to be published as well")


def adapter_closure(caps: Capability) -> Capability:
    """Capabilities reachable from ``caps`` through the separable/full adapters."""
    C = Capability
    closed = caps
    while True:
        grown = closed
        if C.BATCH_EVALUATE | C.NUM_FUNCTIONS in grown:
            grown |= C.FULL_EVALUATE
            if C.BATCH_GRADIENT in grown:
                grown |= C.FULL_GRADIENT
        if C.FULL_EVALUATE in grown:
            grown |= C.BATCH_EVALUATE | C.NUM_FUNCTIONS | C.SHUFFLE
            if C.FULL_GRADIENT in grown:
                grown |= C.BATCH_GRADIENT
        if grown == closed:
            return closed
        closed = grown


@dataclass(frozen=True)
class CapabilityCheck:
    """Outcome of :func:`check_capabilities`. Truthy when the match succeeded."""

    ok: bool
    missing: Capability = Capability.NONE
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_capabilities(available: Capability, required: Capability, *,
                       optimizer: str = "optimizer",
                       problem: str = "the function type") -> CapabilityCheck:
    """Match an optimizer's requirements against a problem's capabilities.

    Capabilities obtainable through an adapter count as available. On
    failure the returned message names every missing contract method and the
    signature it is expected to have.
    """
    missing = required & ~adapter_closure(available)
    if not missing:
        return CapabilityCheck(True)
    lines = [f"{optimizer} cannot optimize {problem}:"]
    for cap in members(missing):
        info = METHODS[cap]
        lines.append(f"  missing {info.name}(): expected {info.signature}")
    return CapabilityCheck(False, missing, "\n".join(lines))


def detect_capabilities(obj: Any) -> Capability:
    """Infer capabilities from the methods ``obj`` actually defines."""
    caps = Capability.NONE
    for cap, info in METHODS.items():
        if info.attribute is not None and callable(getattr(type(obj), info.attribute, None)):
            caps |= cap
    grad = getattr(type(obj), "gradient", None) or getattr(type(obj), "gradient_batch", None)
    if grad is not None and "sparse" in inspect.signature(grad).parameters:
        caps |= Capability.SPARSE_GRADIENT
    return caps


def capabilities_of(problem: Any) -> Capability:
    caps = getattr(problem, "capabilities", None)
    if caps is None:
        return detect_capabilities(problem)
    return caps


def problem_name(problem: Any) -> str:
    return getattr(problem, "name", None) or type(problem).__name__


# --------------------------------------------------------------------------
# gradients and batches


@dataclass(frozen=True)
class SparseGradient:
    """Gradient stored as sorted ``(index, value)`` pairs."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if idx.shape != val.shape:
            raise ContractViolation("sparse gradient needs one value per index")
        if idx.size and (idx[0] < 0 or idx[-1] >= self.dim or np.any(np.diff(idx) <= 0)):
            raise ContractViolation(
                f"sparse gradient indices must be strictly increasing in [0, {self.dim})")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs: dict[int, float], dim: int) -> "SparseGradient":
        keys = sorted(pairs)
        return cls(np.array(keys, dtype=np.int64), np.array([pairs[k] for k in keys]), dim)

    @classmethod
    def from_dense(cls, dense) -> "SparseGradient":
        dense = np.asarray(dense, dtype=np.float64).reshape(-1)
        idx = np.flatnonzero(dense)
        return cls(idx, dense[idx], dense.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.indices, self.values)}

    @property
    def nnz(self) -> int:
        return int(self.indices.size)


Gradient = Union[np.ndarray, SparseGradient]


def densify(gradient: Gradient) -> np.ndarray:
    if isinstance(gradient, SparseGradient):
        return gradient.to_dense()
    return np.asarray(gradient, dtype=np.float64).reshape(-1)


def sparsify(gradient: Gradient) -> SparseGradient:
    if isinstance(gradient, SparseGradient):
        return gradient
    return SparseGradient.from_dense(gradient)


@dataclass(frozen=True)
class BatchRange:
    """Components ``start, ..., start + batch_size - 1`` of a separable problem."""

    start: int
    batch_size: int

    @property
    def stop(self) -> int:
        return self.start + self.batch_size

    def validate(self, num_functions: int) -> None:
        if self.start < 0 or self.batch_size < 1 or self.stop > num_functions:
            raise ContractViolation(
                f"batch range start={self.start}, batch_size={self.batch_size} is outside "
                f"the {num_functions} available component functions")


def epoch_ranges(num_functions: int, batch_size: int) -> list[BatchRange]:
    """Consecutive batches covering ``[0, num_functions)``; the last may be short."""
    if batch_size < 1:
        raise ConfigurationError("batch_size must be >= 1")
    return [BatchRange(s, min(batch_size, num_functions - s))
            for s in range(0, num_functions, batch_size)]


def as_params(params, dim: int | None = None) -> np.ndarray:
    """Coerce to a contiguous float64 vector and check its length."""
    x = np.asarray(params, dtype=np.float64).reshape(-1)
    if dim is not None and x.size != dim:
        raise ContractViolation(f"expected a parameter vector of dimension {dim}, got {x.size}")
    return x


# --------------------------------------------------------------------------
# problem base class


class Problem:
    """Convenience base class for objective functions.

    Subclasses set ``capabilities`` and implement the matching methods;
    publishing a capability without the method is rejected when the class
    is defined. Subclassing is optional: any object with ``dim``,
    ``capabilities`` and the methods works.
    """

    capabilities: ClassVar[Capability] = Capability.NONE
    name: str | None = None
    dim: int

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if "capabilities" not in cls.__dict__:
            return
        caps = cls.capabilities
        validate_capabilities(caps)
        absent = [METHODS[c].attribute for c in members(caps)
                  if METHODS[c].attribute and not callable(getattr(cls, METHODS[c].attribute, None))]
        if absent:
            raise TypeError(f"{cls.__name__} publishes capabilities but does not define "
                            f"{', '.join(absent)}")

    def _params(self, params) -> np.ndarray:
        return as_params(params, self.dim)

    def _range(self, start: int, batch_size: int) -> BatchRange:
        batch = BatchRange(int(start), int(batch_size))
        batch.validate(self.num_functions())  # type: ignore[attr-defined]
        return batch


class _Adapter(Problem):
    def __init__(self, inner):
        self.inner = inner
        self.dim = inner.dim

    def __getattr__(self, attr):
        # only reached for attributes not defined on the adapter itself
        if attr == "inner":
            raise AttributeError(attr)
        return getattr(self.inner, attr)

    @property
    def name(self):
        return problem_name(self.inner)


class SeparableAsFull(_Adapter):
    """Full-objective view of a separable problem (sums over all components)."""

    def __init__(self, inner):
        inner_caps = capabilities_of(inner)
        if not (Capability.BATCH_EVALUATE | Capability.NUM_FUNCTIONS) in inner_caps:
            raise CapabilityError(f"adapt_separable_to_full: {problem_name(inner)} has no "
                                  f"Evaluate(params, start, batch_size) / NumFunctions() "
                                  f"methods to adapt")
        super().__init__(inner)
        caps = inner_caps | Capability.FULL_EVALUATE
        if Capability.BATCH_GRADIENT in inner_caps:
            caps |= Capability.FULL_GRADIENT
        self.capabilities = caps  # type: ignore[misc]

    def evaluate(self, params) -> float:
        return float(self.inner.evaluate_batch(params, 0, self.inner.num_functions()))

    def gradient(self, params, sparse: bool = False):
        inner_caps = capabilities_of(self.inner)
        if Capability.FULL_GRADIENT in inner_caps:
            return gradient_full(self.inner, params, sparse=sparse)
        if Capability.BATCH_GRADIENT not in inner_caps:
            raise CapabilityError(
                f"{self.name} has no Gradient(params, start, batch_size) method to adapt")
        return gradient_batch(self.inner, params, BatchRange(0, self.inner.num_functions()),
                              sparse=sparse)


class FullAsSeparable(_Adapter):
    """Single-component separable view of a full-objective problem."""

    def __init__(self, inner):
        inner_caps = capabilities_of(inner)
        if Capability.FULL_EVALUATE not in inner_caps:
            raise CapabilityError(f"adapt_full_to_separable: {problem_name(inner)} has no "
                                  f"Evaluate(params) method to adapt")
        super().__init__(inner)
        caps = inner_caps | SEPARABLE
        if Capability.FULL_GRADIENT in inner_caps:
            caps |= Capability.BATCH_GRADIENT
        self.capabilities = caps  # type: ignore[misc]

    def num_functions(self) -> int:
        return 1

    def shuffle(self, seed: int) -> None:
        pass

    def evaluate_batch(self, params, start: int, batch_size: int) -> float:
        self._range(start, batch_size)
        return float(self.inner.evaluate(params))

    def gradient_batch(self, params, start: int, batch_size: int, sparse: bool = False):
        if Capability.BATCH_GRADIENT not in self.capabilities:
            raise CapabilityError(f"{self.name} has no Gradient(params) method to adapt")
        self._range(start, batch_size)
        return gradient_full(self.inner, params, sparse=sparse)


def adapt_separable_to_full(problem) -> SeparableAsFull:
    return SeparableAsFull(problem)


def adapt_full_to_separable(problem) -> FullAsSeparable:
    return FullAsSeparable(problem)


def resolve(problem, required: Capability, optimizer: str = "optimizer"):
    """Return ``problem`` or an adapter view of it that provides ``required``.

    Raises :class:`CapabilityError` with the capability diagnostic when no
    adapter path exists.
    """
    caps = capabilities_of(problem)
    check = check_capabilities(caps, required, optimizer=optimizer, problem=problem_name(problem))
    if not check:
        raise CapabilityError(check.message)
    if required in caps:
        return problem
    candidates = []
    if Capability.BATCH_EVALUATE | Capability.NUM_FUNCTIONS in caps:
        candidates.append(lambda: SeparableAsFull(problem))
    if Capability.FULL_EVALUATE in caps:
        candidates.append(lambda: FullAsSeparable(problem))
    candidates.append(lambda: FullAsSeparable(SeparableAsFull(problem)))
    candidates.append(lambda: SeparableAsFull(FullAsSeparable(problem)))
    for make in candidates:
        try:
            view = make()
        except CapabilityError:
            continue
        if required in view.capabilities:
            return view
    raise CapabilityError(check.message)  # pragma: no cover - closure and adapters agree


# --------------------------------------------------------------------------
# contract operations with adapter fallback


def _need(problem, cap: Capability, op: str):
    caps = capabilities_of(problem)
    if cap not in caps:
        raise CapabilityError(check_capabilities(caps, cap, optimizer=op,
                                                 problem=problem_name(problem)).message)


def evaluate_full(problem, params) -> float:
    """Objective at ``params``; separable problems are summed over all components."""
    x = as_params(params, problem.dim)
    caps = capabilities_of(problem)
    if Capability.FULL_EVALUATE in caps:
        return float(problem.evaluate(x))
    return SeparableAsFull(problem).evaluate(x)


def evaluate_batch(problem, params, batch: BatchRange) -> float:
    x = as_params(params, problem.dim)
    caps = capabilities_of(problem)
    view = problem if Capability.BATCH_EVALUATE in caps else FullAsSeparable(problem)
    batch.validate(view.num_functions())
    return float(view.evaluate_batch(x, batch.start, batch.batch_size))


def _convert(grad, sparse: bool) -> Gradient:
    return sparsify(grad) if sparse else densify(grad)


def gradient_full(problem, params, sparse: bool = False) -> Gradient:
    x = as_params(params, problem.dim)
    caps = capabilities_of(problem)
    if Capability.FULL_GRADIENT not in caps:
        if Capability.BATCH_GRADIENT in caps:
            return SeparableAsFull(problem).gradient(x, sparse=sparse)
        _need(problem, Capability.FULL_GRADIENT, "gradient_full")
    if Capability.SPARSE_GRADIENT in caps:
        return _convert(problem.gradient(x, sparse=sparse), sparse)
    return _convert(problem.gradient(x), sparse)


def gradient_batch(problem, params, batch: BatchRange, sparse: bool = False) -> Gradient:
    """Sum of the component gradients in ``batch``."""
    x = as_params(params, problem.dim)
    caps = capabilities_of(problem)
    if Capability.BATCH_GRADIENT not in caps:
        if Capability.FULL_GRADIENT in caps and Capability.FULL_EVALUATE in caps:
            view = FullAsSeparable(problem)
            batch.validate(1)
            return view.gradient_batch(x, batch.start, batch.batch_size, sparse=sparse)
        _need(problem, Capability.BATCH_GRADIENT, "gradient_batch")
    batch.validate(problem.num_functions())
    if Capability.SPARSE_GRADIENT in caps:
        g = problem.gradient_batch(x, batch.start, batch.batch_size, sparse=sparse)
    else:
        g = problem.gradient_batch(x, batch.start, batch.batch_size)
    return _convert(g, sparse)


def partial_gradient(problem, params, j: int) -> SparseGradient:
    _need(problem, Capability.PARTIAL_GRADIENT, "partial_gradient")
    x = as_params(params, problem.dim)
    n = problem.num_features()
    if not 0 <= j < n:
        raise ContractViolation(f"feature index {j} outside [0, {n})")
    return sparsify(problem.partial_gradient(x, j))


def num_functions(problem) -> int:
    caps = capabilities_of(problem)
    if Capability.NUM_FUNCTIONS in caps:
        return int(problem.num_functions())
    return FullAsSeparable(problem).num_functions()


def num_features(problem) -> int:
    _need(problem, Capability.NUM_FEATURES, "num_features")
    return int(problem.num_features())


def shuffle(problem, seed: int) -> None:
    if Capability.SHUFFLE in capabilities_of(problem):
        problem.shuffle(seed)


# --------------------------------------------------------------------------
# structural types, for static checkers
#
# Optimizer entry points are annotated with these, so a type checker flags
# an unsuitable problem at the call site and names the missing method.


@runtime_checkable
class HasEvaluate(Protocol):
    dim: int

    def evaluate(self, params: np.ndarray) -> float: ...


@runtime_checkable
class HasGradient(HasEvaluate, Protocol):
    def gradient(self, params: np.ndarray) -> Any: ...


@runtime_checkable
class HasBatchEvaluate(Protocol):
    dim: int

    def evaluate_batch(self, params: np.ndarray, start: int, batch_size: int) -> float: ...

    def num_functions(self) -> int: ...


@runtime_checkable
class HasBatchGradient(HasBatchEvaluate, Protocol):
    def gradient_batch(self, params: np.ndarray, start: int, batch_size: int) -> Any: ...


@runtime_checkable
class HasPartialGradient(Protocol):
    dim: int

    def partial_gradient(self, params: np.ndarray, j: int) -> Any: ...

    def num_features(self) -> int: ...
