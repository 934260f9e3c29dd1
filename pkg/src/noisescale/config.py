"""Run configuration.

A run is configured by a flat key = value file plus command line
overrides; flags always win over the file. The one environment variable
the package reads is NOISESCALE_OUTPUT_DIR, which overrides the output
directory between the file and the flags. The seed is mandatory and
nothing ever falls back to wall-clock seeding; two runs with the same
configuration are the same run.

Key reference (types in parentheses, defaults in brackets):

  seed (int, required)        master seed for init, shuffling, synthesis
  output_dir (str) [.]        where reports are written

  data (path)                 dataset file; omit to use synthetic blobs
  data_format (csv|raw_f64) [csv]
  labeled (bool) [true]       csv only; raw_f64 never carries labels
  normalize (bool) [false]    min-max each feature column into [0, 1]
  blobs_n (int) [1024]        synthetic blob example count
  blobs_dim (int) [16]        feature count, square number for transforms
  blobs_classes (int) [3]
  blobs_separation (float) [2.0]
  blobs_imbalance (float) [1.0]
  val_fraction (float) [0.2]

  hidden (ints, comma) [32]   hidden layer widths
  activation (relu|tanh) [relu]

  optimizer (gd|sgd|momentum|adam|lamb) [sgd]
  learning_rate (float) [0.1]
  momentum (float) [0.9]
  beta1 (float) [0.9]
  beta2 (float) [0.999]
  epsilon (float) [1e-8]
  weight_decay (float) [0.0]  decoupled, applied after each step

  batch_size (int) [32]
  max_steps (int) [1000]

  b_small (int) [batch_size / 4, at least 1]
  b_big (int) [batch_size]    must equal batch_size when measuring
  gns_alpha (float) [0.01]
  gns_warmup (int) [50]
  gns_iterations (int) [2000] fixed-point iterations on quadratic input
  policy (balanced|min_time|min_compute) [balanced]
  hardware_cap (int) [4096]
  batch_grid (ints, comma) [powers of two up to hardware_cap]
  eps_max (float)             base step size for eps_opt scaling

  sweep_grid (comma of ints or 'recommended') [8,recommended]
  lr_rule (fixed|eps_opt_scaled) [eps_opt_scaled]
  target_val_loss (float)     required for sweeps

  quadratic (path)            quadratic model file for estimate/verify

  transforms (names, comma) [whole catalog]
  magnitudes (floats, comma) [0,0.25,0.5,0.75,1]
  num_groups (int) [5]
  embed_dim (int) [16]
  embed_hidden (int) [32]
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .exceptions import ConfigError
from .flatfile import load_flat_kv

OUTPUT_DIR_ENV = "NOISESCALE_OUTPUT_DIR"

_MISSING = object()


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"config key {key!r}: expected a boolean, got {raw!r}")


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: expected an integer, got {raw!r}") from None


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: expected a number, got {raw!r}") from None


def _parse_int_list(raw: str, key: str) -> tuple[int, ...]:
    items = [tok.strip() for tok in raw.split(",") if tok.strip()]
    if not items:
        raise ConfigError(f"config key {key!r}: expected a comma list of integers")
    return tuple(_parse_int(tok, key) for tok in items)


def _parse_float_list(raw: str, key: str) -> tuple[float, ...]:
    items = [tok.strip() for tok in raw.split(",") if tok.strip()]
    if not items:
        raise ConfigError(f"config key {key!r}: expected a comma list of numbers")
    return tuple(_parse_float(tok, key) for tok in items)


def _parse_str_list(raw: str, key: str) -> tuple[str, ...]:
    items = [tok.strip() for tok in raw.split(",") if tok.strip()]
    if not items:
        raise ConfigError(f"config key {key!r}: expected a comma list")
    return tuple(items)


_PARSERS = {
    "seed": _parse_int,
    "output_dir": lambda raw, key: raw,
    "data": lambda raw, key: raw,
    "data_format": lambda raw, key: raw,
    "labeled": _parse_bool,
    "normalize": _parse_bool,
    "blobs_n": _parse_int,
    "blobs_dim": _parse_int,
    "blobs_classes": _parse_int,
    "blobs_separation": _parse_float,
    "blobs_imbalance": _parse_float,
    "val_fraction": _parse_float,
    "hidden": _parse_int_list,
    "activation": lambda raw, key: raw,
    "optimizer": lambda raw, key: raw,
    "learning_rate": _parse_float,
    "momentum": _parse_float,
    "beta1": _parse_float,
    "beta2": _parse_float,
    "epsilon": _parse_float,
    "weight_decay": _parse_float,
    "batch_size": _parse_int,
    "max_steps": _parse_int,
    "b_small": _parse_int,
    "b_big": _parse_int,
    "gns_alpha": _parse_float,
    "gns_warmup": _parse_int,
    "gns_iterations": _parse_int,
    "policy": lambda raw, key: raw,
    "hardware_cap": _parse_int,
    "batch_grid": _parse_int_list,
    "eps_max": _parse_float,
    "sweep_grid": _parse_str_list,
    "lr_rule": lambda raw, key: raw,
    "target_val_loss": _parse_float,
    "quadratic": lambda raw, key: raw,
    "transforms": _parse_str_list,
    "magnitudes": _parse_float_list,
    "num_groups": _parse_int,
    "embed_dim": _parse_int,
    "embed_hidden": _parse_int,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    output_dir: str = "."
    data: str | None = None
    data_format: str = "csv"
    labeled: bool = True
    normalize: bool = False
    blobs_n: int = 1024
    blobs_dim: int = 16
    blobs_classes: int = 3
    blobs_separation: float = 2.0
    blobs_imbalance: float = 1.0
    val_fraction: float = 0.2
    hidden: tuple[int, ...] = (32,)
    activation: str = "relu"
    optimizer: str = "sgd"
    learning_rate: float = 0.1
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    batch_size: int = 32
    max_steps: int = 1000
    b_small: int | None = None
    b_big: int | None = None
    gns_alpha: float = 0.01
    gns_warmup: int = 50
    gns_iterations: int = 2000
    policy: str = "balanced"
    hardware_cap: int = 4096
    batch_grid: tuple[int, ...] | None = None
    eps_max: float | None = None
    sweep_grid: tuple[str, ...] = ("8", "recommended")
    lr_rule: str = "eps_opt_scaled"
    target_val_loss: float | None = None
    quadratic: str | None = None
    transforms: tuple[str, ...] | None = None
    magnitudes: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    num_groups: int = 5
    embed_dim: int = 16
    embed_hidden: int = 32

    def __post_init__(self):
        if self.seed is None or int(self.seed) < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not (0.0 < self.val_fraction < 1.0):
            raise ConfigError(
                f"val_fraction must lie strictly between 0 and 1, got {self.val_fraction!r}"
            )
        if self.data is not None and not Path(self.data).exists():
            raise ConfigError(f"data file does not exist: {self.data}")
        if self.quadratic is not None and not Path(self.quadratic).exists():
            raise ConfigError(f"quadratic model file does not exist: {self.quadratic}")
        if self.lr_rule not in ("fixed", "eps_opt_scaled"):
            raise ConfigError(
                f"lr_rule must be 'fixed' or 'eps_opt_scaled', got {self.lr_rule!r}"
            )

    def resolved_pair_sizes(self) -> tuple[int, int]:
        """(b_small, b_big) with defaults anchored on the batch size."""
        b_big = self.b_big if self.b_big is not None else self.batch_size
        b_small = self.b_small if self.b_small is not None else max(1, b_big // 4)
        return b_small, b_big

    def resolved_batch_grid(self) -> tuple[int, ...]:
        if self.batch_grid is not None:
            return self.batch_grid
        grid = []
        b = 1
        while b <= self.hardware_cap:
            grid.append(b)
            b *= 2
        return tuple(grid)


def build_config(
    config_path: str | None,
    overrides: dict[str, str] | None = None,
) -> RunConfig:
    """Merge a config file with command line overrides (flags win).

    Unknown keys are errors, not warnings; a silently ignored typo in a
    config file costs more debugging than this check costs to fail.
    """
    merged: dict[str, str] = {}
    if config_path is not None:
        merged.update(load_flat_kv(config_path))
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        merged["output_dir"] = env_out
    if overrides:
        merged.update(overrides)

    known = {f.name for f in fields(RunConfig)}
    parsed: dict[str, object] = {}
    for key, raw in merged.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        parsed[key] = _PARSERS[key](raw, key)
    if "seed" not in parsed:
        raise ConfigError(
            "seed is required; set it in the config file or pass --seed"
        )
    return RunConfig(**parsed)
