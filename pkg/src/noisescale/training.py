"""Minibatch training loop with optional noise scale measurement.

One loop serves the trainer, the sweep, and the noise scale estimator.
Epochs reshuffle with Fisher-Yates, batches are contiguous slices of the
epoch order, and a short final batch still takes an optimizer step but
is skipped by the noise scale accumulator, which needs its two batch
sizes exact. Metrics are evaluated at epoch boundaries; convergence is
declared when the moving mean of the last `PATIENCE_WINDOW` validation
losses drops to the target, which rides out single-epoch noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gns, mlp, optim
from .data import Dataset, make_batches, make_rng, shuffle_epoch
from .exceptions import ConfigError, NumericError
from .numeric import ParameterVector

PATIENCE_WINDOW = 5


@dataclass(frozen=True)
class GnsOptions:
    """Paired measurement riding along with training. The training batch
    is the big batch, so pair.b_big must equal the batch size."""

    pair: gns.PairedBatchConfig
    alpha: float = gns.DEFAULT_EMA_ALPHA
    warmup: int = gns.DEFAULT_WARMUP_STEPS


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    steps: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass(frozen=True, eq=False)
class TrainResult:
    theta: ParameterVector
    steps: int
    epochs: int
    history: tuple[EpochStats, ...]
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    converged_at_step: int | None
    accumulator: gns.GnsAccumulator | None


def evaluate(
    spec: mlp.MlpSpec, theta: ParameterVector, dataset: Dataset
) -> tuple[float, float]:
    """(mean loss, accuracy) over a labeled dataset."""
    if dataset.labels is None:
        raise ConfigError(f"dataset {dataset.name!r} has no labels to evaluate")
    proba = mlp.predict_proba(spec, theta, dataset.features)
    loss = mlp.mean_loss(spec, theta, dataset.features, dataset.labels)
    acc = float((proba.argmax(axis=1) == dataset.labels).mean())
    return loss, acc


def train_classifier(
    model_spec: mlp.MlpSpec,
    train: Dataset,
    val: Dataset,
    optimizer: optim.OptimizerConfig,
    batch_size: int,
    max_steps: int,
    seed: int,
    weight_decay: float = 0.0,
    gns_options: GnsOptions | None = None,
    target_val_loss: float | None = None,
) -> TrainResult:
    """Train for at most max_steps, evaluating every epoch.

    With `gns_options`, every full batch also feeds the paired noise
    estimators from its per-example gradients. With `target_val_loss`,
    training stops early once the patience-window mean of validation
    loss reaches the target; `converged_at_step` records where.

    A max_steps of zero is allowed and reports the untouched initial
    parameters with their metrics.

    Raises
    ------
    NumericError
        If the training loss goes non-finite; the message names the step
        and suggests a smaller learning rate.
    """
    if train.labels is None:
        raise ConfigError(f"training dataset {train.name!r} has no labels")
    if max_steps < 0:
        raise ConfigError(f"max_steps must be nonnegative, got {max_steps}")
    if gns_options is not None and gns_options.pair.b_big != batch_size:
        raise ConfigError(
            f"noise measurement needs the training batch as its big batch: "
            f"batch_size={batch_size}, b_big={gns_options.pair.b_big}"
        )
    if optimizer.kind == "gd":
        batch_size = train.n_examples

    rng = make_rng(seed)
    theta = mlp.init_parameters(model_spec)
    state = optim.init_state(optimizer, theta)
    acc_state = (
        gns.GnsAccumulator(alpha=gns_options.alpha) if gns_options is not None else None
    )

    history: list[EpochStats] = []
    recent_val: list[float] = []
    steps = 0
    epoch = 0
    converged_at: int | None = None

    def record_epoch():
        train_loss, train_acc = evaluate(model_spec, theta, train)
        val_loss, val_acc = evaluate(model_spec, theta, val)
        history.append(
            EpochStats(
                epoch=epoch,
                steps=steps,
                train_loss=train_loss,
                train_acc=train_acc,
                val_loss=val_loss,
                val_acc=val_acc,
            )
        )
        recent_val.append(val_loss)

    while steps < max_steps and converged_at is None:
        epoch += 1
        order = shuffle_epoch(train.n_examples, rng)
        for batch in make_batches(train.n_examples, batch_size, order):
            if steps >= max_steps:
                break
            want_pe = acc_state is not None and not batch.is_partial
            try:
                grads = mlp.loss_and_gradients(
                    model_spec,
                    theta,
                    train.features[batch.indices],
                    train.labels[batch.indices],
                    want_per_example=want_pe,
                )
            except NumericError as exc:
                raise NumericError(
                    f"training went non-finite at step {steps} ({exc}); "
                    "lower the learning rate or check the data scaling"
                ) from exc
            if not np.isfinite(grads.mean_loss):
                raise NumericError(
                    f"training loss became {grads.mean_loss!r} at step {steps}; "
                    "lower the learning rate or check the data scaling"
                )
            if want_pe:
                rho_sq, s = gns.paired_stats_from_per_example(
                    grads.per_example, gns_options.pair
                )
                acc_state = gns.ema_update(acc_state, rho_sq, s)
            theta, state = optim.step(optimizer, state, theta, grads.batch_grad)
            theta = optim.apply_decoupled_weight_decay(
                theta, weight_decay, optimizer.learning_rate
            )
            steps += 1
        record_epoch()
        if target_val_loss is not None and len(recent_val) >= 1:
            window = recent_val[-PATIENCE_WINDOW:]
            if sum(window) / len(window) <= target_val_loss:
                converged_at = steps

    if not history:
        # zero step budget: report the initial parameters
        record_epoch()

    last = history[-1]
    return TrainResult(
        theta=theta,
        steps=steps,
        epochs=epoch,
        history=tuple(history),
        train_loss=last.train_loss,
        train_acc=last.train_acc,
        val_loss=last.val_loss,
        val_acc=last.val_acc,
        converged_at_step=converged_at,
        accumulator=acc_state,
    )
