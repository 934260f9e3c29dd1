"""Command line entry point.

Five subcommands share one configuration pipeline: an optional flat
key = value file, then the NOISESCALE_OUTPUT_DIR environment variable,
then repeated --set key=value flags, then the shorthand flags; later
layers win. Every run writes a JSON report whose non-timing content is
byte-identical when the run is repeated with the same configuration.

  train             fit the classifier, write train_report.json + epochs.csv
  estimate-gns      measure the noise scale, write gns_report.json + tradeoff.csv
  sweep             batch-size sweep to a target loss, write sweep_report.json + sweep.csv
  verify-quadratic  self-check closed forms against direct recomputation
  group-transforms  band augmentation tuples, write groups_report.json

Exit status: 0 on success, 1 when verify-quadratic finds a failing
check, 2 for configuration or input problems, 3 when the numbers go bad
(divergence, unusable estimate).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import gns, mlp, optim, quadratic, reports, training
from .augment import RandomProjectionEmbedder
from .config import RunConfig, build_config
from .data import (
    Dataset,
    load_dataset,
    make_blobs_dataset,
    make_rng,
    spawn_streams,
    split_train_val,
)
from .exceptions import (
    CatalogError,
    ConfigError,
    DataFormatError,
    DegenerateInputError,
    InsufficientSignalError,
    NumericError,
    ShapeError,
)
from .frechet import psd_sqrtm
from .grouping import default_tuple_grid, group_tuples, grouping_report, tuple_distances

USAGE_EXIT = 2
NUMERIC_EXIT = 3

WIDE_GRID_RATIO = 8


def _parse_set(values: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for item in values:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def _resolve_config(args) -> RunConfig:
    overrides = _parse_set(args.set or [])
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if args.data is not None:
        overrides["data"] = args.data
    if args.quadratic is not None:
        overrides["quadratic"] = args.quadratic
    return build_config(args.config, overrides)


def _load_or_make_dataset(config: RunConfig) -> Dataset:
    if config.data is not None:
        return load_dataset(
            config.data,
            config.data_format,
            labeled=config.labeled,
            normalize=config.normalize,
        )
    return make_blobs_dataset(
        config.blobs_n,
        config.blobs_dim,
        config.blobs_classes,
        separation=config.blobs_separation,
        imbalance=config.blobs_imbalance,
        seed=config.seed,
    )


def _split(config: RunConfig, dataset: Dataset) -> tuple[Dataset, Dataset]:
    split_rng = spawn_streams(config.seed, 1)[0]
    return split_train_val(dataset, config.val_fraction, split_rng)


def _model_spec(config: RunConfig, dataset: Dataset) -> mlp.MlpSpec:
    if dataset.labels is None:
        raise ConfigError("this command needs a labeled dataset")
    return mlp.MlpSpec(
        layer_widths=(dataset.n_features, *config.hidden, dataset.n_classes),
        activation=config.activation,
        seed=config.seed,
    )


def _optimizer(config: RunConfig, learning_rate: float | None = None) -> optim.OptimizerConfig:
    return optim.OptimizerConfig(
        kind=config.optimizer,
        learning_rate=config.learning_rate if learning_rate is None else learning_rate,
        momentum=config.momentum,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
    )


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_payload(config: RunConfig) -> dict:
    payload = dataclasses.asdict(config)
    # where the report lands is not part of what the run computed
    payload.pop("output_dir")
    return payload


def _write_report(out: Path, name: str, summary: dict, config: RunConfig,
                  wall_seconds: float, extra_timing: dict | None = None) -> Path:
    timing = {"wall_seconds": wall_seconds}
    if extra_timing:
        timing.update(extra_timing)
    path = out / name
    reports.write_json_report(
        path,
        {
            "summary": summary,
            "config": _config_payload(config),
            reports.TIMING_KEY: timing,
        },
    )
    return path


def _history_payload(result: training.TrainResult) -> list[dict]:
    return [
        {
            "epoch": row.epoch,
            "steps": row.steps,
            "train_loss": row.train_loss,
            "train_acc": row.train_acc,
            "val_loss": row.val_loss,
            "val_acc": row.val_acc,
        }
        for row in result.history
    ]


def cmd_train(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(config)
    started = time.perf_counter()

    dataset = _load_or_make_dataset(config)
    train, val = _split(config, dataset)
    spec = _model_spec(config, dataset)
    result = training.train_classifier(
        model_spec=spec,
        train=train,
        val=val,
        optimizer=_optimizer(config),
        batch_size=min(config.batch_size, train.n_examples),
        max_steps=config.max_steps,
        seed=config.seed,
        weight_decay=config.weight_decay,
        target_val_loss=config.target_val_loss,
    )

    summary = {
        "dataset": dataset.name,
        "n_train": train.n_examples,
        "n_val": val.n_examples,
        "n_features": dataset.n_features,
        "n_classes": dataset.n_classes,
        "steps": result.steps,
        "epochs": result.epochs,
        "train_loss": result.train_loss,
        "train_acc": result.train_acc,
        "val_loss": result.val_loss,
        "val_acc": result.val_acc,
        "converged_at_step": result.converged_at_step,
        "history": _history_payload(result),
    }
    wall = time.perf_counter() - started
    report_path = _write_report(out, "train_report.json", summary, config, wall)
    reports.write_epoch_csv(out / "epochs.csv", result.history)
    print(
        f"trained {result.steps} steps ({result.epochs} epochs): "
        f"train loss {result.train_loss:.4f} acc {result.train_acc:.3f}, "
        f"val loss {result.val_loss:.4f} acc {result.val_acc:.3f}"
    )
    if result.converged_at_step is not None:
        print(f"reached target validation loss at step {result.converged_at_step}")
    print(f"report: {report_path}")
    return 0


def _eps_max_for(config: RunConfig, fallback: float = 1.0) -> float:
    return config.eps_max if config.eps_max is not None else fallback


def _estimate_on_dataset(config: RunConfig):
    """Train with the paired estimators riding along; returns the
    estimate plus the training result it rode on."""
    dataset = _load_or_make_dataset(config)
    train, val = _split(config, dataset)
    b_small, b_big = config.resolved_pair_sizes()
    pair = gns.PairedBatchConfig(b_small=b_small, b_big=b_big)
    if b_big > train.n_examples:
        raise ConfigError(
            f"big batch ({b_big}) exceeds the training set ({train.n_examples})"
        )
    if config.gns_warmup >= config.max_steps:
        raise ConfigError(
            f"warmup ({config.gns_warmup}) leaves no measured steps; "
            f"raise max_steps above {config.gns_warmup}"
        )
    spec = _model_spec(config, dataset)
    result = training.train_classifier(
        model_spec=spec,
        train=train,
        val=val,
        optimizer=_optimizer(config),
        batch_size=b_big,
        max_steps=config.max_steps,
        seed=config.seed,
        weight_decay=config.weight_decay,
        gns_options=training.GnsOptions(
            pair=pair, alpha=config.gns_alpha, warmup=config.gns_warmup
        ),
    )
    estimate = gns.noise_scale(result.accumulator, warmup=config.gns_warmup)
    return estimate, pair, result, dataset


def _estimate_on_quadratic(config: RunConfig):
    """Paired estimation at a fixed point of a quadratic model, next to
    the analytic values it should reproduce."""
    qspec = quadratic.load_quadratic_spec(config.quadratic)
    theta = qspec.center + 1.0
    b_small, b_big = config.resolved_pair_sizes()
    pair = gns.PairedBatchConfig(b_small=b_small, b_big=b_big)
    rng = make_rng(config.seed)

    def sample(batch_size: int):
        return quadratic.sample_gradients(
            qspec, theta, batch_size, rng, want_per_example=True
        )

    estimate = gns.estimate_stationary(
        sample,
        pair,
        iterations=config.gns_iterations,
        alpha=config.gns_alpha,
        warmup=config.gns_warmup,
    )
    analytic = quadratic.true_noise_scale(qspec, theta)
    return estimate, pair, qspec, theta, analytic


def cmd_estimate_gns(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(config)
    started = time.perf_counter()

    summary: dict
    if config.quadratic is not None:
        estimate, pair, qspec, theta, analytic = _estimate_on_quadratic(config)
        eps_max = _eps_max_for(config, quadratic.max_useful_step(qspec, theta))
        summary = {
            "source": "quadratic",
            "dim": qspec.dim,
            "analytic_b_noise": analytic.b_noise,
            "analytic_b_simple": analytic.b_simple,
        }
        print(f"analytic  b_noise {analytic.b_noise:.4f}  b_simple {analytic.b_simple:.4f}")
        print(f"estimated b_noise {estimate.b_noise_hat:.4f}  "
              f"({estimate.steps_used} iterations, pair {pair.b_small}/{pair.b_big}; "
              f"the paired estimator tracks b_simple)")
    else:
        estimate, pair, result, dataset = _estimate_on_dataset(config)
        eps_max = _eps_max_for(config)
        summary = {
            "source": "dataset",
            "dataset": dataset.name,
            "train_val_loss": result.val_loss,
        }
        print(f"estimated b_noise {estimate.b_noise_hat:.4f} over "
              f"{estimate.steps_used} steps (pair {pair.b_small}/{pair.b_big})")

    recommendation = gns.recommend_batch(
        estimate, policy=config.policy, hardware_cap=config.hardware_cap
    )
    curve = gns.tradeoff_curve(
        estimate.b_noise_hat, config.resolved_batch_grid(), eps_max=eps_max
    )
    summary.update(
        {
            "b_noise_hat": estimate.b_noise_hat,
            "rho_sq_ema": estimate.rho_sq_ema,
            "s_ema": estimate.s_ema,
            "steps_used": estimate.steps_used,
            "b_small": pair.b_small,
            "b_big": pair.b_big,
            "policy": config.policy,
            "recommended_batch": recommendation,
            "eps_max": eps_max,
            "tradeoff": reports.tradeoff_payload(curve),
        }
    )
    wall = time.perf_counter() - started
    report_path = _write_report(out, "gns_report.json", summary, config, wall)
    reports.write_tradeoff_csv(out / "tradeoff.csv", curve)
    if curve.degenerate:
        print("estimate is not positive; tradeoff curve written flat at eps_max")
    print(f"recommended batch size ({config.policy}): {recommendation}")
    print(f"report: {report_path}")
    return 0


def _resolve_sweep_grid(config: RunConfig, recommendation: int | None) -> tuple[int, ...]:
    grid: list[int] = []
    for token in config.sweep_grid:
        if token == "recommended":
            if recommendation is None:
                raise ConfigError("sweep grid token 'recommended' failed to resolve")
            value = recommendation
        else:
            try:
                value = int(token)
            except ValueError:
                raise ConfigError(
                    f"sweep grid entries must be integers or 'recommended', got {token!r}"
                ) from None
        if value < 1:
            raise ConfigError(f"sweep batch sizes must be positive, got {value}")
        if value not in grid:
            grid.append(value)
    if not grid:
        raise ConfigError("sweep grid is empty")
    return tuple(grid)


def cmd_sweep(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(config)
    started = time.perf_counter()

    if config.target_val_loss is None:
        raise ConfigError("sweeps need target_val_loss to define convergence")
    if config.lr_rule == "eps_opt_scaled" and config.eps_max is None:
        raise ConfigError("lr_rule eps_opt_scaled needs eps_max in the config")

    needs_estimate = (
        config.lr_rule == "eps_opt_scaled" or "recommended" in config.sweep_grid
    )
    estimate = None
    if needs_estimate:
        estimate, _, _, _ = _estimate_on_dataset(config)
        print(
            f"noise scale estimate b_noise {estimate.b_noise_hat:.4f} "
            f"({estimate.steps_used} steps)"
        )

    recommendation = None
    if estimate is not None:
        recommendation = gns.recommend_batch(
            estimate, policy=config.policy, hardware_cap=config.hardware_cap
        )
    grid = _resolve_sweep_grid(config, recommendation)
    if recommendation is not None and "recommended" in config.sweep_grid:
        print(f"sweep grid {list(grid)} ('recommended' resolved to {recommendation})")

    if config.lr_rule == "fixed" and max(grid) >= WIDE_GRID_RATIO * min(grid):
        print(
            f"warning: fixed learning rate across a {min(grid)}..{max(grid)} grid; "
            "large batches cannot buy bigger steps, expect them to waste compute",
            file=sys.stderr,
        )

    dataset = _load_or_make_dataset(config)
    train, val = _split(config, dataset)
    spec = _model_spec(config, dataset)

    rows = []
    for batch in grid:
        if batch > train.n_examples:
            raise ConfigError(
                f"sweep batch {batch} exceeds the training set ({train.n_examples})"
            )
        if config.lr_rule == "fixed":
            lr = config.learning_rate
        else:
            lr = gns.eps_opt(
                config.eps_max, max(estimate.b_noise_hat, 0.0), batch
            )
        row_started = time.perf_counter()
        result = training.train_classifier(
            model_spec=spec,
            train=train,
            val=val,
            optimizer=_optimizer(config, learning_rate=lr),
            batch_size=batch,
            max_steps=config.max_steps,
            seed=config.seed,
            weight_decay=config.weight_decay,
            target_val_loss=config.target_val_loss,
        )
        row_wall = time.perf_counter() - row_started
        converged = result.converged_at_step is not None
        rows.append(
            {
                "batch": batch,
                "learning_rate": lr,
                "steps_to_target": result.converged_at_step if converged else result.steps,
                "converged": converged,
                "final_val_loss": result.val_loss,
                "wall_seconds": row_wall,
            }
        )
        status = (
            f"reached target at step {result.converged_at_step}"
            if converged
            else f"did not reach target in {result.steps} steps"
        )
        print(f"batch {batch:>5}  lr {lr:.5f}  {status}  val loss {result.val_loss:.4f}")

    summary = {
        "target_val_loss": config.target_val_loss,
        "lr_rule": config.lr_rule,
        "grid": list(grid),
        "rows": [
            {key: value for key, value in row.items() if key != "wall_seconds"}
            for row in rows
        ],
    }
    if estimate is not None:
        summary["b_noise_hat"] = estimate.b_noise_hat
        summary["recommended_batch"] = recommendation
    wall = time.perf_counter() - started
    report_path = _write_report(
        out,
        "sweep_report.json",
        summary,
        config,
        wall,
        extra_timing={"per_batch_seconds": [row["wall_seconds"] for row in rows]},
    )
    reports.write_sweep_csv(out / "sweep.csv", rows)
    print(f"report: {report_path}")
    return 0


# verification always measures with this pair: the widest nested spread,
# so the difference statistics carry the least amplification
VERIFY_PAIR = gns.PairedBatchConfig(b_small=1, b_big=16)


def _default_verify_spec() -> quadratic.QuadraticSpec:
    """Built-in example: anisotropic curvature, dense noise covariance.
    Fixed internal seed; the run seed only drives the sampling."""
    dim = 64
    rng = make_rng(0)
    factor = rng.normal(0.0, 1.0, size=(dim, dim))
    noise_cov = factor @ factor.T / dim + 0.5 * np.eye(dim)
    return quadratic.QuadraticSpec(
        dim=dim,
        hessian=np.diag(np.linspace(0.2, 1.2, dim)),
        noise_cov=noise_cov,
        center=np.zeros(dim),
        seed=0,
    )


def cmd_verify_quadratic(args) -> int:
    config = _resolve_config(args)
    started = time.perf_counter()

    if config.quadratic is not None:
        qspec = quadratic.load_quadratic_spec(config.quadratic)
        source = config.quadratic
    else:
        qspec = _default_verify_spec()
        source = "built-in example"
    theta = qspec.center + 1.0
    rng = make_rng(config.seed)
    checks: list[tuple[str, bool, str]] = []

    # closed forms against a direct dense recomputation, no shared code path
    grad = qspec.hessian @ (theta - qspec.center)
    b_noise_direct = float(
        np.trace(qspec.hessian @ qspec.noise_cov) / (grad @ qspec.hessian @ grad)
    )
    b_simple_direct = float(np.trace(qspec.noise_cov) / (grad @ grad))
    analytic = quadratic.true_noise_scale(qspec, theta)
    err = max(
        abs(analytic.b_noise - b_noise_direct) / abs(b_noise_direct),
        abs(analytic.b_simple - b_simple_direct) / abs(b_simple_direct),
    )
    checks.append(
        ("closed-form noise scales match dense recomputation", err < 1e-10,
         f"rel err {err:.2e}")
    )

    # with curvature a multiple of identity the two scales are one number
    c_iso = float(np.trace(qspec.hessian)) / qspec.dim
    iso = quadratic.QuadraticSpec(
        dim=qspec.dim,
        hessian=c_iso * np.eye(qspec.dim),
        noise_cov=qspec.noise_cov,
        center=qspec.center,
        seed=qspec.seed,
    )
    iso_scales = quadratic.true_noise_scale(iso, theta)
    iso_gap = abs(iso_scales.b_noise - iso_scales.b_simple) / iso_scales.b_simple
    checks.append(
        ("isotropic curvature collapses the two noise scales", iso_gap < 1e-12,
         f"rel gap {iso_gap:.2e}")
    )

    # quick unbiasedness check of the paired per-draw statistics
    pair = VERIFY_PAIR
    draws = 4000
    rho_sq_sum = 0.0
    s_sum = 0.0
    for _ in range(draws):
        grads = quadratic.sample_gradients(
            qspec, theta, pair.b_big, rng, want_per_example=True
        )
        rho_sq, s = gns.paired_stats_from_per_example(grads.per_example, pair)
        rho_sq_sum += rho_sq
        s_sum += s
    true_rho_sq = float(grad @ grad)
    true_s = float(np.trace(qspec.noise_cov))
    rho_err = abs(rho_sq_sum / draws - true_rho_sq) / true_rho_sq
    s_err = abs(s_sum / draws - true_s) / true_s
    mc_ok = rho_err < 0.1 and s_err < 0.1
    checks.append(
        (f"paired statistics are unbiased over {draws} draws", mc_ok,
         f"signal rel err {rho_err:.3f}, noise rel err {s_err:.3f}")
    )

    # the smoothed ratio estimates the simple scale; run it at a fixed
    # point of the isotropic variant, where that is also b_noise
    def sample(batch_size: int):
        return quadratic.sample_gradients(
            iso, theta, batch_size, rng, want_per_example=True
        )

    estimate = gns.estimate_stationary(
        sample,
        pair,
        iterations=config.gns_iterations,
        alpha=config.gns_alpha,
        warmup=config.gns_warmup,
    )
    est_err = abs(estimate.b_noise_hat - iso_scales.b_simple) / iso_scales.b_simple
    checks.append(
        (f"smoothed estimate within 10% after {config.gns_iterations} iterations",
         est_err < 0.10, f"rel err {est_err:.3f}")
    )

    # square root used by the distance code reconstructs the covariance
    root = psd_sqrtm(qspec.noise_cov)
    recon = float(
        np.linalg.norm(root @ root - qspec.noise_cov)
        / max(np.linalg.norm(qspec.noise_cov), 1.0)
    )
    checks.append(
        ("matrix square root reconstructs the covariance", recon < 1e-8,
         f"residual {recon:.2e}")
    )

    print(f"verifying quadratic model from {source} (dim {qspec.dim})")
    all_ok = True
    for name, ok, detail in checks:
        all_ok = all_ok and ok
        print(f"  {'PASS' if ok else 'FAIL'}  {name} ({detail})")
    wall = time.perf_counter() - started
    print(f"{'all checks passed' if all_ok else 'CHECKS FAILED'} "
          f"in {wall:.1f}s")
    return 0 if all_ok else 1


def cmd_group_transforms(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(config)
    started = time.perf_counter()

    dataset = _load_or_make_dataset(config)
    embedder = RandomProjectionEmbedder(
        feature_dim=dataset.n_features,
        embed_dim=config.embed_dim,
        hidden_dim=config.embed_hidden,
        seed=config.seed,
    )
    tuples = default_tuple_grid(config.transforms, config.magnitudes)
    distances = tuple_distances(
        dataset.features, tuples, embedder, seed=config.seed
    )
    result = group_tuples(tuples, distances, config.num_groups)
    payload = grouping_report(tuples, distances, result)

    summary = dict(payload)
    summary["dataset"] = dataset.name
    summary["n_examples"] = dataset.n_examples
    wall = time.perf_counter() - started
    report_path = _write_report(out, "groups_report.json", summary, config, wall)

    print(
        f"grouped {len(tuples)} (transform, magnitude) tuples into "
        f"{len(result.groups)} bands"
    )
    if result.fewer_than_requested:
        print(
            f"note: {config.num_groups} groups requested; tied distances "
            f"support only {len(result.groups)}"
        )
    for group in payload["groups"]:
        rep = payload["tuples"][group["representative"]]
        print(
            f"  group {group['id']}: band [{group['band'][0]:.4f}, "
            f"{group['band'][1]:.4f}], {len(group['members'])} tuples, "
            f"representative {rep['transform']}@{rep['magnitude']:g}"
        )
    print(f"report: {report_path}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key; may repeat",
    )
    parser.add_argument("--seed", type=int, help="master seed (overrides the file)")
    parser.add_argument("--output-dir", help="where reports are written")
    parser.add_argument("--data", help="dataset file (csv or raw_f64)")
    parser.add_argument("--quadratic", help="quadratic model file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisescale",
        description="Gradient noise scale measurement, batch size advice, "
        "and augmentation search space compression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    handlers = {
        "train": (cmd_train, "train the classifier and log per-epoch metrics"),
        "estimate-gns": (
            cmd_estimate_gns,
            "estimate the gradient noise scale and recommend a batch size",
        ),
        "sweep": (
            cmd_sweep,
            "train across a batch size grid to a target validation loss",
        ),
        "verify-quadratic": (
            cmd_verify_quadratic,
            "cross-check the analytic machinery on a quadratic model",
        ),
        "group-transforms": (
            cmd_group_transforms,
            "band augmentation tuples by the distribution shift they cause",
        ),
    }
    for name, (handler, help_text) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, DataFormatError, CatalogError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (NumericError, InsufficientSignalError, DegenerateInputError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
