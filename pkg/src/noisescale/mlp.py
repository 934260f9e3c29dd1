"""Small dense classifier with hand-written reverse-mode gradients.

The forward pass is a plain affine/activation stack ending in softmax
cross-entropy; the backward pass is the textbook chain rule, written out
so that per-example gradients fall out of the same sweep as the batch
gradient. Everything is float64 and deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataFormatError, ShapeError
from .gradients import ModelGradients
from .numeric import ParameterVector
from .validation import check_features, check_features_labels, check_finite

_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of a fully connected classifier.

    layer_widths runs from input dimension to class count, so a spec with
    widths (4, 16, 3) has one hidden layer of 16 units. The final width is
    the number of classes and must be at least 2.
    """

    layer_widths: tuple[int, ...]
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ConfigError(f"need input and output widths, got {widths!r}")
        if any(w < 1 for w in widths):
            raise ConfigError(f"layer widths must be positive, got {widths!r}")
        if widths[-1] < 2:
            raise ConfigError(f"output width must be at least 2, got {widths[-1]}")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(
                f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}"
            )
        if int(self.seed) < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_classes(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_features(self) -> int:
        return self.layer_widths[0]


def init_parameters(spec: MlpSpec) -> ParameterVector:
    """Seeded Glorot-style uniform weights, zero biases.

    Weight entries for a layer with fan_in rows and fan_out columns are
    drawn from U(-a, a) with a = sqrt(6 / (fan_in + fan_out)). The draw
    order is fixed by layer index, so the same seed always yields the
    same vector.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    segments = []
    widths = spec.layer_widths
    for layer, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        segments.append((f"layer{layer}.weight", weight))
        segments.append((f"layer{layer}.bias", np.zeros(fan_out)))
    return ParameterVector.from_segments(segments)


def _unpack(spec: MlpSpec, theta: ParameterVector):
    widths = spec.layer_widths
    layers = []
    for layer, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        w = theta.segment(f"layer{layer}.weight").reshape(fan_in, fan_out)
        b = theta.segment(f"layer{layer}.bias")
        layers.append((w, b))
    return layers


def _check_batch(spec: MlpSpec, X, y=None):
    X = check_features(X, "X")
    if X.shape[1] != spec.n_features:
        raise ShapeError(
            f"X has {X.shape[1]} columns, model expects {spec.n_features}"
        )
    if y is None:
        return X, None
    X, y = check_features_labels(X, y)
    if y.size and int(y.max()) >= spec.n_classes:
        raise DataFormatError(
            f"label {int(y.max())} outside class range [0, {spec.n_classes})"
        )
    return X, y


def _forward(spec: MlpSpec, theta: ParameterVector, X: np.ndarray):
    """Returns (pre-activations per layer, post-activations per layer).

    activations[0] is the input; activations[-1] is the logits.
    """
    layers = _unpack(spec, theta)
    activations = [X]
    pre = []
    h = X
    for i, (w, b) in enumerate(layers):
        z = h @ w + b
        pre.append(z)
        if i < len(layers) - 1:
            h = np.maximum(z, 0.0) if spec.activation == "relu" else np.tanh(z)
        else:
            h = z
        activations.append(h)
    return pre, activations


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def predict_logits(spec: MlpSpec, theta: ParameterVector, X) -> np.ndarray:
    X, _ = _check_batch(spec, X)
    _, activations = _forward(spec, theta, X)
    return activations[-1]


def predict_proba(spec: MlpSpec, theta: ParameterVector, X) -> np.ndarray:
    return np.exp(_log_softmax(predict_logits(spec, theta, X)))


def mean_loss(spec: MlpSpec, theta: ParameterVector, X, y) -> float:
    """Mean cross-entropy over the batch, no gradients.

    All-zero parameters give the uniform prediction and therefore a loss
    of log(n_classes) regardless of the inputs.
    """
    X, y = _check_batch(spec, X, y)
    _, activations = _forward(spec, theta, X)
    logp = _log_softmax(activations[-1])
    return float(-logp[np.arange(X.shape[0]), y].mean())


def loss_and_gradients(
    spec: MlpSpec,
    theta: ParameterVector,
    X,
    y,
    want_per_example: bool = False,
) -> ModelGradients:
    """Mean cross-entropy and its gradient over one batch.

    With want_per_example the result also carries the B x P matrix of
    per-example loss gradients, whose column mean is the batch gradient
    by construction. The per-example path costs O(B * P) memory, which is
    fine at the model sizes this package targets.

    Raises
    ------
    ShapeError
        On a feature width mismatch.
    DataFormatError
        If a label falls outside the class range.
    """
    X, y = _check_batch(spec, X, y)
    n = X.shape[0]
    layers = _unpack(spec, theta)
    pre, activations = _forward(spec, theta, X)

    logp = _log_softmax(activations[-1])
    loss = float(-logp[np.arange(n), y].mean())

    # delta holds d(per-example loss)/d(pre-activation of this layer)
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0

    per_parts = [] if want_per_example else None
    batch_parts = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        a_in = activations[i]
        if want_per_example:
            dw = np.einsum("bi,bo->bio", a_in, delta).reshape(n, -1)
            per_parts.append((dw, delta.copy()))
        batch_parts[i] = (a_in.T @ delta / n, delta.mean(axis=0))
        if i > 0:
            back = delta @ layers[i][0].T
            z = pre[i - 1]
            if spec.activation == "relu":
                back *= (z > 0.0)
            else:
                back *= 1.0 - np.tanh(z) ** 2
            delta = back

    flat_batch = np.concatenate(
        [np.concatenate([dw.ravel(), db]) for dw, db in batch_parts]
    )
    check_finite(flat_batch, "batch gradient")

    if not want_per_example:
        return ModelGradients(batch_grad=flat_batch, mean_loss=loss, batch_size=n)

    per_parts.reverse()
    per_example = np.concatenate(
        [np.concatenate([dw, db], axis=1) for dw, db in per_parts], axis=1
    )
    return ModelGradients(
        batch_grad=flat_batch, mean_loss=loss, batch_size=n, per_example=per_example
    )
