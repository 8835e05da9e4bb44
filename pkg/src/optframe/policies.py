"""Per-step update rules for the SGD family.

Each policy owns its state (accumulators, step counter) and turns a
gradient into a parameter update via :meth:`UpdatePolicy.apply`. All
accumulators start at zero, so every policy is fully described by its
hyperparameters and the sequence of gradients it has seen.

Non-finite gradients are never applied: the step counter still advances,
the parameters come back unchanged and a message is appended to
``policy.warnings``.
"""
from __future__ import annotations

from typing import Any, ClassVar

import numpy as np

from .core import ConfigurationError, ContractViolation, Gradient, as_params, densify


class UpdatePolicy:
    policy_id: ClassVar[str]
    defaults: ClassVar[dict[str, Any]] = {}
    accumulator_names: ClassVar[tuple[str, ...]] = ()
    # hyperparameters that must lie in the open interval (0, 1)
    _unit_interval: ClassVar[tuple[str, ...]] = ()

    def __init__(self, dim: int, **hyperparameters):
        if dim < 1:
            raise ConfigurationError("dim must be >= 1")
        unknown = set(hyperparameters) - set(self.defaults)
        if unknown:
            raise ConfigurationError(
                f"{self.policy_id}: unknown hyperparameter(s) {', '.join(sorted(unknown))}; "
                f"accepted: {', '.join(self.defaults) or 'none'}")
        self.hyperparameters = {**self.defaults, **hyperparameters}
        for key in self._unit_interval:
            value = self.hyperparameters[key]
            if not 0.0 < value < 1.0:
                raise ConfigurationError(f"{self.policy_id}: {key}={value} must lie in (0, 1)")
        eps = self.hyperparameters.get("epsilon")
        if eps is not None and not eps > 0:
            raise ConfigurationError(f"{self.policy_id}: epsilon={eps} must be > 0")
        self.dim = int(dim)
        self.step_count = 0
        self.accumulators = {name: np.zeros(self.dim) for name in self.accumulator_names}
        self.warnings: list[str] = []

    def __getattr__(self, key):
        try:
            return self.__dict__["hyperparameters"][key]
        except KeyError:
            raise AttributeError(key) from None

    def __repr__(self):
        hp = ", ".join(f"{k}={v!r}" for k, v in self.hyperparameters.items())
        return f"{type(self).__name__}(dim={self.dim}{', ' + hp if hp else ''})"

    def apply(self, params, step_size: float, gradient: Gradient) -> np.ndarray:
        """Return the updated parameters; ``params`` itself is not modified."""
        x = as_params(params, self.dim)
        g = densify(gradient)
        if g.size != self.dim:
            raise ContractViolation(f"gradient has dimension {g.size}, expected {self.dim}")
        if not step_size > 0:
            raise ConfigurationError(f"step_size={step_size} must be > 0")
        self.step_count += 1
        if not np.all(np.isfinite(g)):
            self.warnings.append(f"step {self.step_count}: non-finite gradient, step rejected")
            return x.copy()
        return self._update(x, float(step_size), g)

    def _update(self, x: np.ndarray, lr: float, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Vanilla(UpdatePolicy):
    policy_id = "vanilla"

    def _update(self, x, lr, g):
        return x - lr * g


class Momentum(UpdatePolicy):
    """Heavy-ball momentum: ``v <- mu v - lr g``, ``x <- x + v``."""

    policy_id = "momentum"
    defaults = {"momentum": 0.9}
    accumulator_names = ("velocity",)

    def __init__(self, dim, **hp):
        super().__init__(dim, **hp)
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError(f"momentum: momentum={self.momentum} must lie in [0, 1)")

    def _update(self, x, lr, g):
        v = self.accumulators["velocity"]
        v *= self.momentum
        v -= lr * g
        return x + v


class AdaGrad(UpdatePolicy):
    """Duchi et al. (2011); epsilon added outside the square root."""

    policy_id = "adagrad"
    defaults = {"epsilon": 1e-8}
    accumulator_names = ("sum_squares",)

    def _update(self, x, lr, g):
        s = self.accumulators["sum_squares"]
        s += g * g
        return x - lr * g / (np.sqrt(s) + self.epsilon)


class AdaDelta(UpdatePolicy):
    """Zeiler (2012); epsilon inside both square roots.

    The unit-consistent step is multiplied by ``step_size``, so
    ``step_size=1`` recovers the original method.
    """

    policy_id = "adadelta"
    defaults = {"rho": 0.95, "epsilon": 1e-6}
    accumulator_names = ("mean_sq_grad", "mean_sq_delta")
    _unit_interval = ("rho",)

    def _update(self, x, lr, g):
        rho, eps = self.rho, self.epsilon
        eg, edx = self.accumulators["mean_sq_grad"], self.accumulators["mean_sq_delta"]
        eg *= rho
        eg += (1.0 - rho) * g * g
        delta = -np.sqrt(edx + eps) / np.sqrt(eg + eps) * g
        edx *= rho
        edx += (1.0 - rho) * delta * delta
        return x + lr * delta


class RMSProp(UpdatePolicy):
    """Hinton's RMSProp with epsilon outside the square root.

    With ``bias_correction`` (the default) the running mean square is divided
    by ``1 - decay**t`` like Adam's second moment. This keeps early steps
    from overshooting while the zero-initialised average warms up; the
    plain form is available with ``bias_correction=False``.
    """

    policy_id = "rmsprop"
    defaults = {"decay": 0.99, "epsilon": 1e-8, "bias_correction": True}
    accumulator_names = ("mean_square",)
    _unit_interval = ("decay",)

    def _update(self, x, lr, g):
        ms = self.accumulators["mean_square"]
        ms *= self.decay
        ms += (1.0 - self.decay) * g * g
        denom = ms / (1.0 - self.decay ** self.step_count) if self.bias_correction else ms
        return x - lr * g / (np.sqrt(denom) + self.epsilon)


class Adam(UpdatePolicy):
    """Kingma & Ba (2014) with bias-corrected moments."""

    policy_id = "adam"
    defaults = {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8}
    accumulator_names = ("first_moment", "second_moment")
    _unit_interval = ("beta1", "beta2")

    def _update(self, x, lr, g):
        m, v = self.accumulators["first_moment"], self.accumulators["second_moment"]
        t = self.step_count
        m *= self.beta1
        m += (1.0 - self.beta1) * g
        v *= self.beta2
        v += (1.0 - self.beta2) * g * g
        m_hat = m / (1.0 - self.beta1 ** t)
        v_hat = v / (1.0 - self.beta2 ** t)
        return x - lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


class AdaMax(UpdatePolicy):
    """Adam variant with an exponentially weighted infinity norm."""

    policy_id = "adamax"
    defaults = {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8}
    accumulator_names = ("first_moment", "inf_norm")
    _unit_interval = ("beta1", "beta2")

    def _update(self, x, lr, g):
        m, u = self.accumulators["first_moment"], self.accumulators["inf_norm"]
        m *= self.beta1
        m += (1.0 - self.beta1) * g
        np.maximum(self.beta2 * u, np.abs(g), out=u)
        rate = lr / (1.0 - self.beta1 ** self.step_count)
        return x - rate * m / (u + self.epsilon)


class SMORMS3(UpdatePolicy):
    """Funk (2015): RMSProp with a per-coordinate adaptive memory length.

    The memory starts at zero rather than one, so the first step uses the
    current gradient only (``r = 1``) and moves each coordinate by at most
    ``step_size``. From the second step on the recursion is the published one.
    """

    policy_id = "smorms3"
    defaults = {"epsilon": 1e-16}
    accumulator_names = ("memory", "mean_grad", "mean_sq_grad")

    def _update(self, x, lr, g):
        mem = self.accumulators["memory"]
        g1, g2 = self.accumulators["mean_grad"], self.accumulators["mean_sq_grad"]
        r = 1.0 / (mem + 1.0)
        g1 *= 1.0 - r
        g1 += r * g
        g2 *= 1.0 - r
        g2 += r * g * g
        ratio = g1 * g1 / (g2 + self.epsilon)
        new = x - g * np.minimum(ratio, lr) / (np.sqrt(g2) + self.epsilon)
        mem *= 1.0 - ratio
        mem += 1.0
        return new


POLICIES: dict[str, type[UpdatePolicy]] = {
    cls.policy_id: cls
    for cls in (Vanilla, Momentum, AdaGrad, AdaDelta, RMSProp, Adam, AdaMax, SMORMS3)
}


def initialize_policy(policy_id: str, d: int, hyperparameters: dict | None = None) -> UpdatePolicy:
    try:
        cls = POLICIES[policy_id]
    except KeyError:
        raise ConfigurationError(
            f"unknown update policy {policy_id!r}; known: {', '.join(POLICIES)}") from None
    return cls(d, **(hyperparameters or {}))


def apply_update(state: UpdatePolicy, params, step_size: float, gradient: Gradient) -> np.ndarray:
    return state.apply(params, step_size, gradient)
