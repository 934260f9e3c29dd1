"""First-order update rules over flat parameter vectors.

`step` is a pure function: it takes the previous state and returns the
new parameters and the new state, touching neither input. Weight decay is
deliberately not part of any rule here; `apply_decoupled_weight_decay`
shrinks parameters toward zero as its own separate step so the decay
never leaks into gradient statistics.

Kinds:
  gd        plain gradient descent (callers feed it full-batch gradients)
  sgd       the same rule on minibatch gradients
  momentum  heavy-ball velocity accumulation
  adam      bias-corrected first and second moment scaling
  lamb      adam update rescaled per named segment by the trust ratio
            |theta_segment| / |update_segment|
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, ShapeError
from .numeric import ParameterVector
from .validation import as_vector

OPTIMIZER_KINDS = ("gd", "sgd", "momentum", "adam", "lamb")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str
    learning_rate: float
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ConfigError(
                f"optimizer kind must be one of {OPTIMIZER_KINDS}, got {self.kind!r}"
            )
        if not (self.learning_rate > 0.0):
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum!r}")
        for name in ("beta1", "beta2"):
            val = getattr(self, name)
            if not (0.0 <= val < 1.0):
                raise ConfigError(f"{name} must lie in [0, 1), got {val!r}")
        if not (self.epsilon > 0.0):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}")


@dataclass(frozen=True, eq=False)
class OptimizerState:
    """Moment buffers for one training run. Arrays are never mutated;
    each step returns a fresh state."""

    step_count: int = 0
    velocity: np.ndarray | None = None
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def init_state(config: OptimizerConfig, theta: ParameterVector) -> OptimizerState:
    n = theta.total_len
    if config.kind == "momentum":
        return OptimizerState(velocity=np.zeros(n))
    if config.kind in ("adam", "lamb"):
        return OptimizerState(m=np.zeros(n), v=np.zeros(n))
    return OptimizerState()


def _adam_update(config: OptimizerConfig, state: OptimizerState, grad: np.ndarray):
    t = state.step_count + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grad
    v = config.beta2 * state.v + (1.0 - config.beta2) * grad**2
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    update = m_hat / (np.sqrt(v_hat) + config.epsilon)
    return update, OptimizerState(step_count=t, m=m, v=v)


def step(
    config: OptimizerConfig,
    state: OptimizerState,
    theta: ParameterVector,
    grad,
) -> tuple[ParameterVector, OptimizerState]:
    """One optimizer step. Returns (new parameters, new state)."""
    grad = as_vector(grad, "grad")
    if grad.shape[0] != theta.total_len:
        raise ShapeError(
            f"grad has length {grad.shape[0]}, parameters have {theta.total_len}"
        )
    lr = config.learning_rate

    if config.kind in ("gd", "sgd"):
        new_values = theta.values - lr * grad
        new_state = replace(state, step_count=state.step_count + 1)
    elif config.kind == "momentum":
        velocity = config.momentum * state.velocity + grad
        new_values = theta.values - lr * velocity
        new_state = OptimizerState(step_count=state.step_count + 1, velocity=velocity)
    elif config.kind == "adam":
        update, new_state = _adam_update(config, state, grad)
        new_values = theta.values - lr * update
    else:  # lamb
        update, new_state = _adam_update(config, state, grad)
        new_values = theta.values.copy()
        for _, sl in theta.segment_slices():
            seg_theta = theta.values[sl]
            seg_update = update[sl]
            w_norm = float(np.linalg.norm(seg_theta))
            u_norm = float(np.linalg.norm(seg_update))
            ratio = w_norm / u_norm if w_norm > 0.0 and u_norm > 0.0 else 1.0
            new_values[sl] = seg_theta - lr * ratio * seg_update
    return theta.with_values(new_values), new_state


def apply_decoupled_weight_decay(
    theta: ParameterVector, weight_decay: float, learning_rate: float
) -> ParameterVector:
    """Shrink parameters by (1 - learning_rate * weight_decay).

    Runs after the optimizer step, never inside it, so decay strength is
    independent of gradient scaling. A decay of zero is the identity.

    Raises
    ------
    ConfigError
        If learning_rate * weight_decay reaches 1, which would zero or
        flip the parameters.
    """
    if weight_decay < 0.0:
        raise ConfigError(f"weight_decay must be nonnegative, got {weight_decay!r}")
    if weight_decay == 0.0:
        return theta
    shrink = learning_rate * weight_decay
    if shrink >= 1.0:
        raise ConfigError(
            f"learning_rate * weight_decay = {shrink:g} reaches 1; "
            "the decay step would erase the parameters"
        )
    return theta.with_values(theta.values * (1.0 - shrink))
