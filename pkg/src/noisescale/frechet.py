"""Distance between Gaussian summaries of embedded datasets.

A dataset is summarized by the mean and covariance of its embedding
vectors; two summaries are compared with the Frechet distance between
the Gaussians they define,

    |mu1 - mu2|^2 + trace(C1 + C2 - 2 (C1 C2)^(1/2)).

The matrix square root goes through an eigendecomposition of the
symmetrized product C1^(1/2) C2 C1^(1/2), with any eigenvalue pushed
slightly negative by roundoff clamped to zero. In one dimension the
whole expression collapses to (mu1 - mu2)^2 + (sigma1 - sigma2)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ShapeError
from .validation import as_matrix, as_square_matrix, as_vector, check_finite, check_symmetric


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    """Mean and covariance of one embedded dataset.

    The covariance must be symmetric within 1e-10 and the sample count
    must exceed the embedding dimension, otherwise the covariance cannot
    be full rank and distances between summaries lose meaning.
    """

    mean: np.ndarray
    cov: np.ndarray
    sample_count: int

    def __post_init__(self):
        mean = as_vector(self.mean, "mean")
        cov = as_square_matrix(self.cov, "cov")
        if cov.shape[0] != mean.shape[0]:
            raise ShapeError(
                f"cov has shape {cov.shape}, mean has dimension {mean.shape[0]}"
            )
        check_finite(mean, "mean")
        check_finite(cov, "cov")
        check_symmetric(cov, 1e-10, "cov")
        if self.sample_count < mean.shape[0] + 1:
            raise ShapeError(
                f"sample_count must be at least dim + 1 = {mean.shape[0] + 1}, "
                f"got {self.sample_count}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "sample_count", int(self.sample_count))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_gaussian_summary(embeddings) -> GaussianSummary:
    """Mean and unbiased covariance of embedding rows.

    Raises
    ------
    ShapeError
        With N <= dim rows, naming the minimum usable N.
    """
    emb = as_matrix(embeddings, "embeddings")
    n, dim = emb.shape
    if n < dim + 1:
        raise ShapeError(
            f"need at least {dim + 1} rows to summarize a {dim}-dimensional "
            f"embedding, got {n}"
        )
    check_finite(emb, "embeddings")
    mean = emb.mean(axis=0)
    centered = emb - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianSummary(mean=mean, cov=cov, sample_count=n)


def psd_sqrtm(matrix, rtol: float = 1e-8) -> np.ndarray:
    """Symmetric square root of a positive semi-definite matrix.

    Eigendecomposes the symmetrized input, clamps negative eigenvalues at
    zero, and verifies that squaring the result reconstructs the input
    within `rtol` relative Frobenius error.

    Raises
    ------
    NumericError
        If the eigendecomposition fails to converge or the reconstruction
        residual exceeds the tolerance; the message carries the residual.
    """
    m = as_square_matrix(matrix, "matrix")
    check_finite(m, "matrix")
    sym = 0.5 * (m + m.T)
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed to converge: {exc}") from exc
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    norm = float(np.linalg.norm(sym))
    if norm > 0.0:
        residual = float(np.linalg.norm(root @ root - sym)) / norm
        if residual > rtol:
            raise NumericError(
                f"matrix square root reconstruction residual {residual:g} "
                f"exceeds {rtol:g}; input is too far from positive semi-definite"
            )
    return root


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Frechet distance between two Gaussian summaries.

    Symmetric, zero between a summary and itself, and never negative;
    roundoff that would push it below zero is clamped.
    """
    if a.dim != b.dim:
        raise ShapeError(f"summaries have dimensions {a.dim} and {b.dim}")
    diff = a.mean - b.mean
    root_a = psd_sqrtm(a.cov)
    inner = root_a @ b.cov @ root_a
    inner = 0.5 * (inner + inner.T)
    try:
        w = np.linalg.eigvalsh(inner)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed to converge: {exc}") from exc
    trace_sqrt = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    dist = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * trace_sqrt)
    return max(dist, 0.0)
