"""Estimator-style front end.

These classes wrap the functional core in the fit/predict/transform
idiom: constructor arguments are hyperparameters stored untouched under
their own names, `fit` learns state into trailing-underscore attributes
and returns self, and get_params/set_params/clone behave the standard
way because everything inherits BaseEstimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import gns, mlp, optim, training
from .augment import RandomProjectionEmbedder
from .data import Dataset
from .grouping import default_tuple_grid, group_tuples, grouping_report, tuple_distances
from .validation import check_features, check_features_labels


def _check_fitted(estimator, attribute: str):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet. "
            "Call 'fit' before using this method."
        )


def _optimizer_config(optimizer, learning_rate, momentum) -> optim.OptimizerConfig:
    return optim.OptimizerConfig(
        kind=optimizer, learning_rate=learning_rate, momentum=momentum
    )


class MlpClassifier(ClassifierMixin, BaseEstimator):
    """Small dense softmax classifier trained with the package
    optimizers.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        Hidden widths; the input and output widths come from the data.
    activation : 'relu' or 'tanh'
    optimizer : one of 'gd', 'sgd', 'momentum', 'adam', 'lamb'
    learning_rate : float
        Constant step size; no schedule.
    momentum : float
        Velocity coefficient for the momentum optimizer, ignored by the
        others.
    weight_decay : float
        Decoupled decay applied after each optimizer step.
    batch_size : int
    max_steps : int
    n_classes : int or None
        Fix the output width; inferred from the labels when None.
    random_state : int
        Seed for init and shuffling.
    """

    def __init__(
        self,
        hidden_layer_sizes=(32,),
        activation="relu",
        optimizer="adam",
        learning_rate=0.01,
        momentum=0.9,
        weight_decay=0.0,
        batch_size=32,
        max_steps=500,
        n_classes=None,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.n_classes = n_classes
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_features_labels(X, y)
        n_classes = (
            int(self.n_classes) if self.n_classes is not None else int(y.max()) + 1
        )
        spec = mlp.MlpSpec(
            layer_widths=(X.shape[1], *tuple(self.hidden_layer_sizes), n_classes),
            activation=self.activation,
            seed=int(self.random_state),
        )
        dataset = Dataset(features=X, labels=y, name="fit")
        batch_size = min(int(self.batch_size), dataset.n_examples)
        result = training.train_classifier(
            model_spec=spec,
            train=dataset,
            val=dataset,
            optimizer=_optimizer_config(self.optimizer, self.learning_rate, self.momentum),
            batch_size=batch_size,
            max_steps=int(self.max_steps),
            seed=int(self.random_state),
            weight_decay=float(self.weight_decay),
        )
        self.spec_ = spec
        self.theta_ = result.theta
        self.classes_ = np.arange(n_classes)
        self.n_steps_ = result.steps
        self.loss_curve_ = tuple(row.train_loss for row in result.history)
        self.final_loss_ = result.train_loss
        return self

    def predict_proba(self, X):
        _check_fitted(self, "theta_")
        X = check_features(X, "X")
        return mlp.predict_proba(self.spec_, self.theta_, X)

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[proba.argmax(axis=1)]


class GradientNoiseScale(BaseEstimator):
    """Measure the gradient noise scale of a training run and recommend
    a batch size.

    fit trains the same classifier MlpClassifier would, with the paired
    noise estimators riding along on each full batch, then freezes the
    estimate and the batch recommendation into attributes.

    Parameters
    ----------
    b_small, b_big : int or None
        Measurement batch sizes. b_big doubles as the training batch
        size; b_small defaults to a quarter of it. b_big must be a
        multiple of b_small.
    ema_alpha : float
        Smoothing weight of the estimator averages.
    warmup : int
        Iterations required before an estimate may be reported.
    max_steps : int
    policy : 'balanced', 'min_time', or 'min_compute'
    hardware_cap : int
        Upper clamp of the recommendation.
    eps_max : float
        Base step size that eps_opt scaling interpolates down from.
    Other parameters mirror MlpClassifier.

    Attributes
    ----------
    b_noise_hat_ : float
    rho_sq_ema_, s_ema_ : float
    steps_used_ : int
    recommendation_ : int
    """

    def __init__(
        self,
        hidden_layer_sizes=(32,),
        activation="relu",
        optimizer="sgd",
        learning_rate=0.1,
        momentum=0.9,
        weight_decay=0.0,
        b_small=None,
        b_big=32,
        ema_alpha=gns.DEFAULT_EMA_ALPHA,
        warmup=gns.DEFAULT_WARMUP_STEPS,
        max_steps=500,
        policy="balanced",
        hardware_cap=4096,
        eps_max=1.0,
        n_classes=None,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.b_small = b_small
        self.b_big = b_big
        self.ema_alpha = ema_alpha
        self.warmup = warmup
        self.max_steps = max_steps
        self.policy = policy
        self.hardware_cap = hardware_cap
        self.eps_max = eps_max
        self.n_classes = n_classes
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_features_labels(X, y)
        n_classes = (
            int(self.n_classes) if self.n_classes is not None else int(y.max()) + 1
        )
        b_big = int(self.b_big)
        b_small = int(self.b_small) if self.b_small is not None else max(1, b_big // 4)
        pair = gns.PairedBatchConfig(b_small=b_small, b_big=b_big)
        spec = mlp.MlpSpec(
            layer_widths=(X.shape[1], *tuple(self.hidden_layer_sizes), n_classes),
            activation=self.activation,
            seed=int(self.random_state),
        )
        dataset = Dataset(features=X, labels=y, name="fit")
        result = training.train_classifier(
            model_spec=spec,
            train=dataset,
            val=dataset,
            optimizer=_optimizer_config(self.optimizer, self.learning_rate, self.momentum),
            batch_size=b_big,
            max_steps=int(self.max_steps),
            seed=int(self.random_state),
            weight_decay=float(self.weight_decay),
            gns_options=training.GnsOptions(
                pair=pair, alpha=float(self.ema_alpha), warmup=int(self.warmup)
            ),
        )
        estimate = gns.noise_scale(result.accumulator, warmup=int(self.warmup))
        self.pair_ = pair
        self.estimate_ = estimate
        self.b_noise_hat_ = estimate.b_noise_hat
        self.rho_sq_ema_ = estimate.rho_sq_ema
        self.s_ema_ = estimate.s_ema
        self.steps_used_ = estimate.steps_used
        self.recommendation_ = gns.recommend_batch(
            estimate, policy=self.policy, hardware_cap=int(self.hardware_cap)
        )
        return self

    def tradeoff_curve(self, batch_grid) -> gns.TradeoffCurve:
        _check_fitted(self, "estimate_")
        return gns.tradeoff_curve(
            self.b_noise_hat_, batch_grid, eps_max=float(self.eps_max)
        )

    def eps_opt(self, batch_size: int) -> float:
        """Scaled step size for an arbitrary batch size under the
        fitted noise scale."""
        _check_fitted(self, "estimate_")
        b = max(self.b_noise_hat_, 0.0)
        return gns.eps_opt(float(self.eps_max), b, batch_size)


class TransformGrouper(BaseEstimator):
    """Compress a (transform, magnitude) search space into distance
    bands over one dataset.

    fit embeds the dataset, scores every tuple by the Frechet distance
    its transform induces, and bands the tuples into at most n_groups
    quantile groups.

    Attributes
    ----------
    tuples_ : tuple of TransformTuple
    distances_ : ndarray
    result_ : GroupingResult
    groups_ : tuple of TransformGroup
    """

    def __init__(
        self,
        transforms=None,
        magnitudes=(0.0, 0.25, 0.5, 0.75, 1.0),
        n_groups=5,
        embed_dim=16,
        embed_hidden=32,
        random_state=0,
    ):
        self.transforms = transforms
        self.magnitudes = magnitudes
        self.n_groups = n_groups
        self.embed_dim = embed_dim
        self.embed_hidden = embed_hidden
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_features(X, "X")
        embedder = RandomProjectionEmbedder(
            feature_dim=X.shape[1],
            embed_dim=int(self.embed_dim),
            hidden_dim=int(self.embed_hidden),
            seed=int(self.random_state),
        )
        tuples = default_tuple_grid(self.transforms, tuple(self.magnitudes))
        distances = tuple_distances(X, tuples, embedder, seed=int(self.random_state))
        result = group_tuples(tuples, distances, int(self.n_groups))
        self.embedder_ = embedder
        self.tuples_ = tuples
        self.distances_ = distances
        self.result_ = result
        self.groups_ = result.groups
        return self

    def report(self) -> dict:
        _check_fitted(self, "result_")
        return grouping_report(self.tuples_, self.distances_, self.result_)
