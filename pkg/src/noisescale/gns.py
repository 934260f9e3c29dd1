"""Gradient noise scale estimation and batch size advice.

The estimator compares the squared norms of gradients computed at two
nested batch sizes. For batch sizes B_small < B_big with batch gradients
G_small and G_big, the pair

    rho_sq = (B_big |G_big|^2 - B_small |G_small|^2) / (B_big - B_small)
    s      = (|G_small|^2 - |G_big|^2) / (1/B_small - 1/B_big)

gives unbiased single-iteration estimates of the squared true gradient
norm and of the trace of the per-example gradient covariance. Both are
noisy and either can come out negative on any one iteration; exponential
moving averages of each are maintained separately and their ratio

    b_noise_hat = s_ema / rho_sq_ema

is the running noise scale estimate. A batch around b_noise_hat is the
point of diminishing returns: below it training is nearly perfectly
efficient per example, far above it nearly perfectly efficient per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConfigError,
    DegenerateInputError,
    InsufficientSignalError,
    ShapeError,
)
from .gradients import ModelGradients
from .validation import as_matrix

DEFAULT_EMA_ALPHA = 0.01
DEFAULT_WARMUP_STEPS = 50

RECOMMEND_POLICIES = ("balanced", "min_time", "min_compute")


@dataclass(frozen=True)
class PairedBatchConfig:
    """Sizes for the two nested measurement batches.

    b_big must be a multiple of b_small so the small batch is always an
    exact prefix of the big one, and the sizes must differ or the paired
    estimator denominators vanish.
    """

    b_small: int
    b_big: int

    def __post_init__(self):
        if self.b_small < 1:
            raise ConfigError(f"b_small must be at least 1, got {self.b_small}")
        if self.b_big <= self.b_small:
            raise ConfigError(
                f"b_big must exceed b_small, got b_small={self.b_small} "
                f"b_big={self.b_big}"
            )
        if self.b_big % self.b_small != 0:
            raise ConfigError(
                f"b_big must be a multiple of b_small, got b_small={self.b_small} "
                f"b_big={self.b_big}"
            )


@dataclass(frozen=True)
class GnsAccumulator:
    """EMA state of the paired estimators. Immutable; `ema_update`
    returns the advanced copy."""

    alpha: float = DEFAULT_EMA_ALPHA
    rho_sq_ema: float = 0.0
    s_ema: float = 0.0
    steps_seen: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha!r}")


@dataclass(frozen=True)
class NoiseScaleEstimate:
    b_noise_hat: float
    rho_sq_ema: float
    s_ema: float
    steps_used: int


@dataclass(frozen=True)
class TradeoffPoint:
    batch_size: int
    eps_opt: float
    relative_steps: float
    relative_examples: float


@dataclass(frozen=True)
class TradeoffCurve:
    points: tuple[TradeoffPoint, ...]
    degenerate: bool


def paired_batch_stats(
    grads_small: ModelGradients,
    grads_big: ModelGradients,
    pair: PairedBatchConfig,
) -> tuple[float, float]:
    """Single-iteration unbiased estimates (rho_sq, s).

    rho_sq estimates the squared norm of the true gradient; s estimates
    the trace of the per-example gradient covariance. Either may be
    negative on a given iteration; only their long-run averages are
    meaningful.
    """
    if grads_small.batch_size != pair.b_small or grads_big.batch_size != pair.b_big:
        raise ConfigError(
            f"batch sizes ({grads_small.batch_size}, {grads_big.batch_size}) "
            f"do not match the configured pair ({pair.b_small}, {pair.b_big})"
        )
    b_small = float(pair.b_small)
    b_big = float(pair.b_big)
    norm_small = float(grads_small.batch_grad @ grads_small.batch_grad)
    norm_big = float(grads_big.batch_grad @ grads_big.batch_grad)
    rho_sq = (b_big * norm_big - b_small * norm_small) / (b_big - b_small)
    s = (norm_small - norm_big) / (1.0 / b_small - 1.0 / b_big)
    return rho_sq, s


def paired_stats_from_per_example(
    per_example, pair: PairedBatchConfig
) -> tuple[float, float]:
    """Paired estimates from one batch of per-example gradients.

    The rows must number exactly pair.b_big; the small-batch gradient is
    the mean of the first pair.b_small rows, reusing the gradient work of
    the big batch instead of drawing twice.
    """
    pe = as_matrix(per_example, "per_example")
    if pe.shape[0] != pair.b_big:
        raise ShapeError(
            f"per_example has {pe.shape[0]} rows, the configured b_big is {pair.b_big}"
        )
    g_small = pe[: pair.b_small].mean(axis=0)
    g_big = pe.mean(axis=0)
    b_small = float(pair.b_small)
    b_big = float(pair.b_big)
    norm_small = float(g_small @ g_small)
    norm_big = float(g_big @ g_big)
    rho_sq = (b_big * norm_big - b_small * norm_small) / (b_big - b_small)
    s = (norm_small - norm_big) / (1.0 / b_small - 1.0 / b_big)
    return rho_sq, s


def ema_update(acc: GnsAccumulator, rho_sq: float, s: float) -> GnsAccumulator:
    """Fold one iteration's estimates into the averages.

    The very first observation seeds both averages directly, so there is
    no decay toward a zero initialization to correct for afterwards.
    """
    for name, val in (("rho_sq", rho_sq), ("s", s)):
        if not math.isfinite(val):
            raise DegenerateInputError(f"{name} is not finite: {val!r}")
    if acc.steps_seen == 0:
        return GnsAccumulator(
            alpha=acc.alpha, rho_sq_ema=float(rho_sq), s_ema=float(s), steps_seen=1
        )
    a = acc.alpha
    return GnsAccumulator(
        alpha=a,
        rho_sq_ema=a * float(rho_sq) + (1.0 - a) * acc.rho_sq_ema,
        s_ema=a * float(s) + (1.0 - a) * acc.s_ema,
        steps_seen=acc.steps_seen + 1,
    )


def noise_scale(
    acc: GnsAccumulator, warmup: int = DEFAULT_WARMUP_STEPS
) -> NoiseScaleEstimate:
    """Current noise scale estimate from the accumulated averages.

    Raises
    ------
    InsufficientSignalError
        Before `warmup` iterations have been folded in, or when the
        averaged squared gradient norm is not yet positive. Both mean the
        same thing: keep training and ask again later.
    """
    if warmup < 1:
        raise ConfigError(f"warmup must be at least 1, got {warmup}")
    if acc.steps_seen < warmup:
        raise InsufficientSignalError(
            f"only {acc.steps_seen} iterations accumulated, warmup is {warmup}; "
            "keep training before asking for an estimate"
        )
    if acc.rho_sq_ema <= 0.0:
        raise InsufficientSignalError(
            f"averaged squared gradient norm is {acc.rho_sq_ema:g}, not yet positive; "
            "extend the warmup before asking for an estimate"
        )
    return NoiseScaleEstimate(
        b_noise_hat=acc.s_ema / acc.rho_sq_ema,
        rho_sq_ema=acc.rho_sq_ema,
        s_ema=acc.s_ema,
        steps_used=acc.steps_seen,
    )


def exact_simple_noise(per_example) -> float:
    """Curvature-free noise scale from a full matrix of per-example
    gradients: trace of the unbiased componentwise variance over the
    squared norm of the mean gradient.

    Raises
    ------
    ShapeError
        With fewer than two rows, where the variance is undefined.
    DegenerateInputError
        When the mean gradient is exactly zero.
    """
    pe = as_matrix(per_example, "per_example")
    if pe.shape[0] < 2:
        raise ShapeError(
            f"need at least 2 per-example gradients, got {pe.shape[0]}"
        )
    mean = pe.mean(axis=0)
    mean_sq = float(mean @ mean)
    if mean_sq == 0.0:
        raise DegenerateInputError(
            "mean per-example gradient is zero; the noise ratio is undefined"
        )
    var_trace = float(pe.var(axis=0, ddof=1).sum())
    return var_trace / mean_sq


def eps_opt(eps_max: float, b_noise: float, batch_size: int) -> float:
    """Step size that minimizes expected one-step loss at this batch
    size: eps_max / (1 + b_noise / batch_size)."""
    if not (eps_max > 0.0):
        raise ConfigError(f"eps_max must be positive, got {eps_max!r}")
    if batch_size < 1:
        raise ConfigError(f"batch_size must be positive, got {batch_size}")
    if b_noise < 0.0:
        raise ConfigError(f"b_noise must be nonnegative, got {b_noise!r}")
    return eps_max / (1.0 + b_noise / float(batch_size))


def tradeoff_curve(
    b_noise: float,
    batch_grid,
    eps_max: float = 1.0,
) -> TradeoffCurve:
    """Compute-time tradeoff across batch sizes.

    relative_steps = 1 + b_noise / B is the step count relative to the
    large-batch limit; relative_examples = 1 + B / b_noise is the example
    count relative to the small-batch limit. A non-positive b_noise has
    no tradeoff to describe; the curve comes back flat at 1.0 with the
    degenerate flag set, and eps_opt pinned at eps_max.
    """
    sizes = [int(b) for b in batch_grid]
    if not sizes:
        raise ConfigError("batch_grid must contain at least one batch size")
    if any(b < 1 for b in sizes):
        raise ConfigError(f"batch sizes must be positive, got {sizes!r}")
    degenerate = not (b_noise > 0.0)
    points = []
    for b in sizes:
        if degenerate:
            points.append(
                TradeoffPoint(
                    batch_size=b,
                    eps_opt=eps_max,
                    relative_steps=1.0,
                    relative_examples=1.0,
                )
            )
        else:
            points.append(
                TradeoffPoint(
                    batch_size=b,
                    eps_opt=eps_opt(eps_max, b_noise, b),
                    relative_steps=1.0 + b_noise / b,
                    relative_examples=1.0 + b / b_noise,
                )
            )
    return TradeoffCurve(points=tuple(points), degenerate=degenerate)


def _nearest_power_of_two(x: float) -> int:
    """Power of two nearest to x in log space; 1 for x <= 0."""
    if x <= 1.0:
        return 1
    exponent = round(math.log2(x))
    return int(2**exponent)


def _next_power_of_two_at_least(x: float) -> int:
    if x <= 1.0:
        return 1
    return int(2 ** math.ceil(math.log2(x)))


def _prev_power_of_two_at_most(x: float) -> int:
    if x < 1.0:
        return 1
    return int(2 ** math.floor(math.log2(x)))


def recommend_batch(
    estimate: NoiseScaleEstimate | float,
    policy: str = "balanced",
    hardware_cap: int = 4096,
) -> int:
    """Turn a noise scale estimate into a concrete batch size.

    balanced      power of two nearest the estimate
    min_time      smallest power of two at least 4x the estimate
    min_compute   largest power of two at most a quarter of the estimate

    The result is clamped to [1, hardware_cap]. A non-positive estimate
    recommends batch size 1 under every policy.
    """
    if policy not in RECOMMEND_POLICIES:
        raise ConfigError(
            f"policy must be one of {RECOMMEND_POLICIES}, got {policy!r}"
        )
    if hardware_cap < 1:
        raise ConfigError(f"hardware_cap must be at least 1, got {hardware_cap}")
    b_noise_hat = (
        estimate.b_noise_hat
        if isinstance(estimate, NoiseScaleEstimate)
        else float(estimate)
    )
    if policy == "balanced":
        raw = _nearest_power_of_two(b_noise_hat)
    elif policy == "min_time":
        raw = _next_power_of_two_at_least(4.0 * b_noise_hat)
    else:  # min_compute
        raw = _prev_power_of_two_at_most(max(1.0, b_noise_hat / 4.0))
    return int(min(max(raw, 1), hardware_cap))


def estimate_stationary(
    sample,
    pair: PairedBatchConfig,
    iterations: int,
    alpha: float = DEFAULT_EMA_ALPHA,
    warmup: int = DEFAULT_WARMUP_STEPS,
) -> NoiseScaleEstimate:
    """Run the paired estimator at a fixed point.

    `sample(batch_size)` must return a ModelGradients for a fresh batch.
    Each iteration draws one big batch, reads the small batch off its
    prefix when per-example gradients are present, and otherwise calls
    `sample` a second time for the small batch.
    """
    if iterations < warmup:
        raise ConfigError(
            f"iterations ({iterations}) must reach the warmup ({warmup})"
        )
    acc = GnsAccumulator(alpha=alpha)
    for _ in range(iterations):
        big = sample(pair.b_big)
        if big.per_example is not None:
            rho_sq, s = paired_stats_from_per_example(big.per_example, pair)
        else:
            small = sample(pair.b_small)
            rho_sq, s = paired_batch_stats(small, big, pair)
        acc = ema_update(acc, rho_sq, s)
    return noise_scale(acc, warmup=warmup)
