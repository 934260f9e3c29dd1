"""Gradient noise scale measurement and augmentation space compression.

The package answers two questions about a training run: how large a
batch is worth paying for, and which augmentation settings are actually
distinct. The first comes from paired-batch gradient statistics smoothed
over training; the second from banding (transform, magnitude) tuples by
the distribution shift they induce in an embedding space.
"""

from .augment import (
    TRANSFORM_CATALOG,
    RandomProjectionEmbedder,
    TransformTuple,
    apply_transform,
)
from .data import Dataset, load_dataset, make_blobs_dataset, save_dataset
from .estimators import GradientNoiseScale, MlpClassifier, TransformGrouper
from .exceptions import (
    CatalogError,
    ConfigError,
    DataFormatError,
    DegenerateInputError,
    InsufficientSignalError,
    NumericError,
    ShapeError,
)
from .frechet import GaussianSummary, fit_gaussian_summary, frechet_distance
from .gns import (
    GnsAccumulator,
    NoiseScaleEstimate,
    PairedBatchConfig,
    TradeoffCurve,
    ema_update,
    eps_opt,
    estimate_stationary,
    exact_simple_noise,
    noise_scale,
    paired_batch_stats,
    paired_stats_from_per_example,
    recommend_batch,
    tradeoff_curve,
)
from .grouping import (
    GroupingResult,
    TransformGroup,
    default_tuple_grid,
    group_tuples,
    grouping_report,
    tuple_distances,
)
from .mlp import MlpSpec
from .numeric import ParameterVector
from .optim import OptimizerConfig
from .quadratic import (
    QuadraticSpec,
    expected_loss_after_step,
    load_quadratic_spec,
    max_useful_step,
    save_quadratic_spec,
    true_noise_scale,
)
from .training import TrainResult, train_classifier

__version__ = "0.1.0"

__all__ = [
    "TRANSFORM_CATALOG",
    "CatalogError",
    "ConfigError",
    "DataFormatError",
    "Dataset",
    "DegenerateInputError",
    "GaussianSummary",
    "GnsAccumulator",
    "GradientNoiseScale",
    "GroupingResult",
    "InsufficientSignalError",
    "MlpClassifier",
    "MlpSpec",
    "NoiseScaleEstimate",
    "NumericError",
    "OptimizerConfig",
    "PairedBatchConfig",
    "ParameterVector",
    "QuadraticSpec",
    "RandomProjectionEmbedder",
    "ShapeError",
    "TradeoffCurve",
    "TrainResult",
    "TransformGroup",
    "TransformGrouper",
    "TransformTuple",
    "apply_transform",
    "default_tuple_grid",
    "ema_update",
    "eps_opt",
    "estimate_stationary",
    "exact_simple_noise",
    "expected_loss_after_step",
    "fit_gaussian_summary",
    "frechet_distance",
    "group_tuples",
    "grouping_report",
    "load_dataset",
    "load_quadratic_spec",
    "make_blobs_dataset",
    "max_useful_step",
    "noise_scale",
    "paired_batch_stats",
    "paired_stats_from_per_example",
    "recommend_batch",
    "save_dataset",
    "save_quadratic_spec",
    "tradeoff_curve",
    "train_classifier",
    "true_noise_scale",
    "tuple_distances",
]
