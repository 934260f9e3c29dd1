"""Noisy quadratic model with closed-form answers.

This is the analytic playground the estimators are checked against: a
quadratic loss with a known curvature matrix and per-example gradient
noise with a known covariance, so the critical batch size, the largest
useful step size, and the expected one-step loss change all have exact
expressions. Sampled gradients are the true gradient plus correlated
Gaussian noise drawn through a factor of the covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import DataFormatError, DegenerateInputError, ShapeError
from .flatfile import dump_flat_kv, load_flat_kv
from .gradients import ModelGradients
from .validation import as_square_matrix, as_vector, check_finite, check_psd, check_symmetric


class TrueNoiseScale(NamedTuple):
    b_noise: float
    b_simple: float


@dataclass(frozen=True, eq=False)
class QuadraticSpec:
    """Quadratic loss 0.5 (theta - center)^T hessian (theta - center)
    with additive per-example gradient noise of covariance noise_cov.

    hessian must be symmetric positive definite, noise_cov symmetric
    positive semi-definite. Sampling uses a Cholesky factor of noise_cov
    when one exists and an eigenvalue factor with negatives clamped to
    zero when the covariance is only semi-definite.
    """

    dim: int
    hessian: np.ndarray
    noise_cov: np.ndarray
    center: np.ndarray
    seed: int = 0

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise ShapeError(f"dim must be positive, got {self.dim!r}")
        object.__setattr__(self, "dim", dim)
        h = as_square_matrix(self.hessian, "hessian")
        s = as_square_matrix(self.noise_cov, "noise_cov")
        c = as_vector(self.center, "center")
        for name, arr in (("hessian", h), ("noise_cov", s)):
            if arr.shape[0] != dim:
                raise ShapeError(f"{name} has shape {arr.shape}, expected ({dim}, {dim})")
        if c.shape[0] != dim:
            raise ShapeError(f"center has shape {c.shape}, expected ({dim},)")
        check_finite(h, "hessian")
        check_finite(s, "noise_cov")
        check_finite(c, "center")
        check_symmetric(h, 1e-10, "hessian")
        eig_min = float(np.linalg.eigvalsh(h)[0])
        if eig_min <= 0.0:
            raise ShapeError(
                f"hessian must be positive definite, smallest eigenvalue {eig_min:g}"
            )
        check_psd(s, "noise_cov")
        object.__setattr__(self, "hessian", h)
        object.__setattr__(self, "noise_cov", s)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "_noise_factor", _psd_factor(s))


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Matrix F with F F^T = cov. Cholesky when possible, otherwise an
    eigendecomposition with small negative eigenvalues clamped to zero."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def loss(spec: QuadraticSpec, theta) -> float:
    d = as_vector(theta, "theta") - spec.center
    return 0.5 * float(d @ spec.hessian @ d)


def gradient(spec: QuadraticSpec, theta) -> np.ndarray:
    """The noiseless full gradient hessian @ (theta - center)."""
    d = as_vector(theta, "theta") - spec.center
    return spec.hessian @ d


def sample_gradients(
    spec: QuadraticSpec,
    theta,
    batch_size: int,
    rng: np.random.Generator,
    want_per_example: bool = False,
) -> ModelGradients:
    """Draw a batch of per-example gradients and average them.

    Each per-example gradient is gradient(spec, theta) plus Gaussian
    noise with covariance noise_cov, so the batch mean has mean equal to
    the true gradient and covariance noise_cov / batch_size. mean_loss
    reports the noiseless loss at theta.
    """
    if batch_size < 1:
        raise ShapeError(f"batch_size must be positive, got {batch_size}")
    g = gradient(spec, theta)
    z = rng.standard_normal(size=(batch_size, spec.dim))
    per_example = g + z @ spec._noise_factor.T
    if want_per_example:
        return ModelGradients.from_per_example(per_example, mean_loss=loss(spec, theta))
    return ModelGradients(
        batch_grad=per_example.mean(axis=0),
        mean_loss=loss(spec, theta),
        batch_size=batch_size,
    )


def true_noise_scale(spec: QuadraticSpec, theta) -> TrueNoiseScale:
    """Analytic critical batch sizes at theta.

    b_noise weighs the noise by curvature, trace(H S) / (g^T H g);
    b_simple ignores curvature, trace(S) / |g|^2. They coincide whenever
    the hessian is a multiple of the identity.

    Raises
    ------
    DegenerateInputError
        At a point with zero gradient, where neither ratio is defined.
    """
    g = gradient(spec, theta)
    g_sq = float(g @ g)
    if g_sq == 0.0:
        raise DegenerateInputError(
            "gradient is zero at theta; noise scale is undefined at a stationary point"
        )
    ghg = float(g @ spec.hessian @ g)
    b_noise = float(np.trace(spec.hessian @ spec.noise_cov)) / ghg
    b_simple = float(np.trace(spec.noise_cov)) / g_sq
    return TrueNoiseScale(b_noise=b_noise, b_simple=b_simple)


def max_useful_step(spec: QuadraticSpec, theta) -> float:
    """The step size that minimizes expected loss with noise-free
    gradients, |g|^2 / (g^T H g)."""
    g = gradient(spec, theta)
    g_sq = float(g @ g)
    if g_sq == 0.0:
        raise DegenerateInputError("gradient is zero at theta")
    return g_sq / float(g @ spec.hessian @ g)


def expected_loss_after_step(
    spec: QuadraticSpec, theta, step_size: float, batch_size: int
) -> float:
    """Expectation of the loss after one SGD step of the given size using
    a batch of the given size, exact for the quadratic."""
    if batch_size < 1:
        raise ShapeError(f"batch_size must be positive, got {batch_size}")
    g = gradient(spec, theta)
    g_sq = float(g @ g)
    ghg = float(g @ spec.hessian @ g)
    tr_hs = float(np.trace(spec.hessian @ spec.noise_cov))
    eps = float(step_size)
    return loss(spec, theta) - eps * g_sq + 0.5 * eps**2 * (ghg + tr_hs / batch_size)


def save_quadratic_spec(spec: QuadraticSpec, path) -> None:
    pairs = {
        "dim": str(spec.dim),
        "hessian": " ".join(repr(float(x)) for x in spec.hessian.ravel()),
        "noise_cov": " ".join(repr(float(x)) for x in spec.noise_cov.ravel()),
        "center": " ".join(repr(float(x)) for x in spec.center),
        "seed": str(spec.seed),
    }
    Path(path).write_text(dump_flat_kv(pairs))


def load_quadratic_spec(path) -> QuadraticSpec:
    """Read a quadratic model from a flat key = value file.

    Required keys: dim, hessian, noise_cov, center. Matrix values are
    whitespace separated floats in row-major order, dim * dim of them;
    center takes dim floats. seed is optional and defaults to 0.
    """
    pairs = load_flat_kv(path)
    source = str(path)

    def take(key):
        if key not in pairs:
            raise DataFormatError(f"{source}: missing key {key!r}")
        return pairs.pop(key)

    try:
        dim = int(take("dim"))
    except ValueError as exc:
        raise DataFormatError(f"{source}: dim must be an integer") from exc

    def floats(key, count):
        raw = take(key)
        try:
            vals = np.array([float(tok) for tok in raw.split()])
        except ValueError as exc:
            raise DataFormatError(f"{source}: {key} holds a non-numeric token") from exc
        if vals.shape[0] != count:
            raise DataFormatError(
                f"{source}: {key} needs {count} values, got {vals.shape[0]}"
            )
        return vals

    hessian = floats("hessian", dim * dim).reshape(dim, dim)
    noise_cov = floats("noise_cov", dim * dim).reshape(dim, dim)
    center = floats("center", dim)
    seed = 0
    if "seed" in pairs:
        try:
            seed = int(pairs.pop("seed"))
        except ValueError as exc:
            raise DataFormatError(f"{source}: seed must be an integer") from exc
    if pairs:
        raise DataFormatError(f"{source}: unknown keys {sorted(pairs)!r}")
    return QuadraticSpec(
        dim=dim, hessian=hessian, noise_cov=noise_cov, center=center, seed=seed
    )
