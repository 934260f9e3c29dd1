"""Datasets, loaders, shuffling, and batching.

Randomness policy for the whole package: every stream is a
numpy.random.Generator over the PCG64 bit generator, constructed from an
explicit integer seed. Worker streams are split off the parent seed with
SeedSequence.spawn, so stream identities depend only on (seed, index),
never on timing. Nothing in the package ever seeds from the clock.

Shuffling is a full Fisher-Yates pass: one draw per position from the
generator, every permutation equally likely. Batches are contiguous
slices of the shuffled order; a short final batch is kept and flagged
rather than silently dropped.

On-disk formats:

  csv      one example per line, comma separated floats, optional
           non-numeric header line; when labeled, the last column is an
           integer class label
  raw_f64  16-byte header of two little-endian u64 (row count, row
           width) followed by row-major little-endian float64 values;
           carries no labels
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DataFormatError, ShapeError
from .validation import check_features, check_finite

DATASET_FORMATS = ("csv", "raw_f64")

_RAW_HEADER = struct.Struct("<QQ")


def make_rng(seed: int) -> np.random.Generator:
    """The package-standard generator: PCG64 under the given seed."""
    if int(seed) < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def spawn_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-worker generators split from one seed."""
    if count < 1:
        raise ConfigError(f"count must be at least 1, got {count}")
    if int(seed) < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed!r}")
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature rows with optional integer labels."""

    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = "dataset"

    def __post_init__(self):
        feats = check_features(self.features, "features")
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labels = np.ascontiguousarray(self.labels, dtype=np.int64)
            if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
                raise ShapeError(
                    f"labels have shape {labels.shape}, features have "
                    f"{feats.shape[0]} rows"
                )
            if labels.size and labels.min() < 0:
                raise ShapeError(
                    f"labels must be nonnegative, got {int(labels.min())}"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def n_examples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int | None:
        if self.labels is None:
            return None
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def subset(self, indices, name: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            features=self.features[idx],
            labels=None if self.labels is None else self.labels[idx],
            name=name if name is not None else self.name,
        )


@dataclass(frozen=True)
class Batch:
    """Indices of one batch in epoch order. is_partial marks a short
    final batch; estimators that need an exact batch size skip those."""

    indices: np.ndarray
    is_partial: bool

    @property
    def size(self) -> int:
        return self.indices.shape[0]


def shuffle_epoch(n: int, rng: np.random.Generator) -> np.ndarray:
    """Full Fisher-Yates permutation of range(n).

    Swaps run from the top index down, drawing j uniformly from [0, i]
    each time, so all n! orders are equally likely. Partial shuffles and
    sliced re-shuffles are not acceptable stand-ins; batch quality
    degrades measurably when batches stop being uniform samples.
    """
    if n < 1:
        raise ConfigError(f"n must be at least 1, got {n}")
    order = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def make_batches(n: int, batch_size: int, order=None) -> list[Batch]:
    """Cut an epoch order into contiguous batches.

    Raises ConfigError when batch_size exceeds the dataset, which would
    silently train on a different batch size than configured.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be at least 1, got {batch_size}")
    if batch_size > n:
        raise ConfigError(
            f"batch_size {batch_size} exceeds dataset size {n}"
        )
    if order is None:
        order = np.arange(n)
    else:
        order = np.asarray(order, dtype=np.intp)
        if order.shape != (n,):
            raise ShapeError(f"order has shape {order.shape}, expected ({n},)")
    batches = []
    for start in range(0, n, batch_size):
        chunk = order[start : start + batch_size]
        batches.append(Batch(indices=chunk, is_partial=chunk.shape[0] < batch_size))
    return batches


def _parse_csv(text: str, source: str, labeled: bool) -> Dataset:
    rows = []
    labels = []
    width = None
    first_data_line = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = [tok.strip() for tok in line.split(",")]
        try:
            values = [float(tok) for tok in tokens]
        except ValueError:
            if first_data_line:
                # a non-numeric first line is the optional header
                first_data_line = False
                continue
            bad = next(tok for tok in tokens if not _is_float(tok))
            raise DataFormatError(
                f"{source}: line {lineno}: non-numeric value {bad!r}"
            ) from None
        first_data_line = False
        if width is None:
            width = len(values)
            if labeled and width < 2:
                raise DataFormatError(
                    f"{source}: line {lineno}: labeled rows need at least "
                    "one feature column plus the label"
                )
        elif len(values) != width:
            raise DataFormatError(
                f"{source}: line {lineno}: expected {width} columns, got {len(values)}"
            )
        if labeled:
            label = values[-1]
            if label != int(label) or label < 0:
                raise DataFormatError(
                    f"{source}: line {lineno}: label column must hold a "
                    f"nonnegative integer, got {label!r}"
                )
            labels.append(int(label))
            rows.append(values[:-1])
        else:
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{source}: no data rows")
    features = np.array(rows, dtype=np.float64)
    return Dataset(
        features=features,
        labels=np.array(labels, dtype=np.int64) if labeled else None,
        name=source,
    )


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_raw_f64(blob: bytes, source: str) -> Dataset:
    if len(blob) < _RAW_HEADER.size:
        raise DataFormatError(
            f"{source}: file too short for the 16-byte header ({len(blob)} bytes)"
        )
    n, dim = _RAW_HEADER.unpack_from(blob)
    expected = _RAW_HEADER.size + n * dim * 8
    if n < 1 or dim < 1:
        raise DataFormatError(f"{source}: header declares {n} rows of width {dim}")
    if len(blob) != expected:
        raise DataFormatError(
            f"{source}: header declares {n}x{dim} values ({expected} bytes), "
            f"file has {len(blob)} bytes"
        )
    values = np.frombuffer(blob, dtype="<f8", offset=_RAW_HEADER.size)
    features = values.reshape(n, dim).astype(np.float64)
    return Dataset(features=features, labels=None, name=source)


def load_dataset(
    path,
    fmt: str = "csv",
    labeled: bool = True,
    normalize: bool = False,
) -> Dataset:
    """Read a dataset from disk.

    `labeled` only applies to csv; raw_f64 carries no labels. With
    `normalize`, each feature column is min-max rescaled into [0, 1]
    (constant columns map to 0).
    """
    if fmt not in DATASET_FORMATS:
        raise ConfigError(f"format must be one of {DATASET_FORMATS}, got {fmt!r}")
    path = Path(path)
    source = str(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read {source}: {exc}") from exc
    if not blob:
        raise DataFormatError(f"{source}: file is empty")
    if fmt == "csv":
        try:
            text = blob.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataFormatError(f"{source}: not valid utf-8 text: {exc}") from exc
        ds = _parse_csv(text, source, labeled)
    else:
        ds = _parse_raw_f64(blob, source)
    check_finite(ds.features, f"{source} features")
    if normalize:
        lo = ds.features.min(axis=0)
        span = ds.features.max(axis=0) - lo
        span[span == 0.0] = 1.0
        ds = Dataset(
            features=(ds.features - lo) / span, labels=ds.labels, name=ds.name
        )
    return ds


def save_dataset(dataset: Dataset, path, fmt: str = "csv") -> None:
    """Write a dataset in one of the supported formats. raw_f64 drops
    labels by design; refuse rather than lose them silently."""
    if fmt not in DATASET_FORMATS:
        raise ConfigError(f"format must be one of {DATASET_FORMATS}, got {fmt!r}")
    path = Path(path)
    if fmt == "csv":
        lines = []
        for i in range(dataset.n_examples):
            cells = [repr(float(v)) for v in dataset.features[i]]
            if dataset.labels is not None:
                cells.append(str(int(dataset.labels[i])))
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n")
        return
    if dataset.labels is not None:
        raise ConfigError("raw_f64 cannot carry labels; save as csv instead")
    header = _RAW_HEADER.pack(dataset.n_examples, dataset.n_features)
    body = np.ascontiguousarray(dataset.features, dtype="<f8").tobytes()
    path.write_bytes(header + body)


def make_blobs_dataset(
    n_examples: int,
    n_features: int,
    n_classes: int,
    separation: float = 2.0,
    imbalance: float = 1.0,
    seed: int = 0,
    name: str = "blobs",
) -> Dataset:
    """Gaussian class blobs with controllable separation and imbalance.

    Class centers are drawn N(0, separation^2) per coordinate; examples
    add unit Gaussian spread around their center. `imbalance` is the
    target count ratio between the largest and smallest class, 1.0 being
    balanced; intermediate classes interpolate geometrically. Features
    are min-max squashed into [0, 1] so the rows double as image-like
    inputs. Row order is shuffled, all from the one seed.
    """
    if n_examples < n_classes:
        raise ConfigError(
            f"need at least one example per class: {n_examples} examples, "
            f"{n_classes} classes"
        )
    if n_classes < 2:
        raise ConfigError(f"n_classes must be at least 2, got {n_classes}")
    if n_features < 1:
        raise ConfigError(f"n_features must be positive, got {n_features}")
    if not (separation > 0.0):
        raise ConfigError(f"separation must be positive, got {separation!r}")
    if not (imbalance >= 1.0):
        raise ConfigError(f"imbalance must be at least 1.0, got {imbalance!r}")
    rng = make_rng(seed)
    weights = imbalance ** (np.arange(n_classes) / max(n_classes - 1, 1))
    weights /= weights.sum()
    counts = np.maximum(1, np.floor(weights * n_examples).astype(int))
    while counts.sum() > n_examples:
        counts[int(np.argmax(counts))] -= 1
    while counts.sum() < n_examples:
        counts[int(np.argmin(counts))] += 1
    centers = rng.normal(0.0, separation, size=(n_classes, n_features))
    features = np.empty((n_examples, n_features))
    labels = np.empty(n_examples, dtype=np.int64)
    row = 0
    for k in range(n_classes):
        count = int(counts[k])
        features[row : row + count] = centers[k] + rng.normal(
            0.0, 1.0, size=(count, n_features)
        )
        labels[row : row + count] = k
        row += count
    order = shuffle_epoch(n_examples, rng)
    features = features[order]
    labels = labels[order]
    lo = features.min()
    span = features.max() - lo
    if span == 0.0:
        span = 1.0
    features = (features - lo) / span
    return Dataset(features=features, labels=labels, name=name)


def split_train_val(
    dataset: Dataset, val_fraction: float, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split; validation takes the tail fraction
    but always at least one example of each side."""
    if not (0.0 < val_fraction < 1.0):
        raise ConfigError(
            f"val_fraction must lie strictly between 0 and 1, got {val_fraction!r}"
        )
    n = dataset.n_examples
    if n < 2:
        raise ConfigError("need at least 2 examples to split")
    n_val = min(max(int(round(n * val_fraction)), 1), n - 1)
    order = shuffle_epoch(n, rng)
    val_idx = order[n - n_val :]
    train_idx = order[: n - n_val]
    return (
        dataset.subset(train_idx, name=f"{dataset.name}:train"),
        dataset.subset(val_idx, name=f"{dataset.name}:val"),
    )
