"""Gaussian summaries and the distance between them."""

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from noisescale.exceptions import ShapeError
from noisescale.frechet import (
    GaussianSummary,
    fit_gaussian_summary,
    frechet_distance,
    psd_sqrtm,
)


def summary_1d(mean, var, count=10):
    return GaussianSummary(
        mean=np.array([mean]), cov=np.array([[var]]), sample_count=count
    )


def random_summary(rng, dim):
    w = rng.normal(size=(dim, dim))
    return GaussianSummary(
        mean=rng.normal(size=dim),
        cov=w @ w.T / dim + 0.05 * np.eye(dim),
        sample_count=dim + 5,
    )


def test_identical_summaries_have_zero_distance():
    rng = np.random.Generator(np.random.PCG64(0))
    a = random_summary(rng, 4)
    assert frechet_distance(a, a) == 0.0


def test_one_dimensional_closed_forms():
    # (mu1 - mu2)^2 + (sigma1 - sigma2)^2
    assert_allclose(frechet_distance(summary_1d(0.0, 1.0), summary_1d(1.0, 1.0)),
                    1.0, atol=1e-9)
    assert_allclose(frechet_distance(summary_1d(0.0, 1.0), summary_1d(1.0, 4.0)),
                    2.0, atol=1e-9)


def test_symmetry_and_self_distance_on_random_summaries():
    rng = np.random.Generator(np.random.PCG64(7))
    for _ in range(100):
        dim = int(rng.integers(1, 6))
        a = random_summary(rng, dim)
        b = random_summary(rng, dim)
        d_ab = frechet_distance(a, b)
        d_ba = frechet_distance(b, a)
        assert d_ab >= 0.0
        assert_allclose(d_ab, d_ba, rtol=1e-8, atol=1e-10)
        assert frechet_distance(a, a) <= 1e-10


def test_mean_only_shift_is_squared_distance():
    dim = 3
    cov = np.diag([0.5, 1.0, 2.0])
    a = GaussianSummary(mean=np.zeros(dim), cov=cov, sample_count=9)
    b = GaussianSummary(mean=np.array([1.0, 2.0, 2.0]), cov=cov.copy(),
                        sample_count=9)
    assert_allclose(frechet_distance(a, b), 9.0, rtol=1e-9)


def test_matches_scipy_square_root_route():
    rng = np.random.Generator(np.random.PCG64(3))
    for _ in range(20):
        a = random_summary(rng, 5)
        b = random_summary(rng, 5)
        covmean = scipy.linalg.sqrtm(a.cov @ b.cov)
        reference = float(
            (a.mean - b.mean) @ (a.mean - b.mean)
            + np.trace(a.cov + b.cov - 2.0 * np.real(covmean))
        )
        assert_allclose(frechet_distance(a, b), reference, rtol=1e-6, atol=1e-8)


def test_psd_sqrtm_reconstructs():
    rng = np.random.Generator(np.random.PCG64(11))
    for _ in range(25):
        dim = int(rng.integers(2, 8))
        w = rng.normal(size=(dim, dim))
        cov = w @ w.T + 0.01 * np.eye(dim)
        root = psd_sqrtm(cov)
        err = np.linalg.norm(root @ root - cov) / np.linalg.norm(cov)
        assert err <= 1e-8


def test_psd_sqrtm_of_zero_is_zero():
    assert_allclose(psd_sqrtm(np.zeros((3, 3))), np.zeros((3, 3)))


def test_dimension_mismatch_rejected():
    a = summary_1d(0.0, 1.0)
    b = GaussianSummary(mean=np.zeros(2), cov=np.eye(2), sample_count=9)
    with pytest.raises(ShapeError):
        frechet_distance(a, b)


class TestFitSummary:
    def test_moments_match_numpy(self):
        rng = np.random.Generator(np.random.PCG64(5))
        X = rng.normal(size=(50, 3))
        summary = fit_gaussian_summary(X)
        assert summary.sample_count == 50
        assert_allclose(summary.mean, X.mean(axis=0), rtol=1e-12)
        assert_allclose(summary.cov, np.cov(X, rowvar=False), rtol=1e-10)

    def test_too_few_rows_names_minimum(self):
        X = np.zeros((3, 3))
        with pytest.raises(ShapeError, match="4"):
            fit_gaussian_summary(X)

    def test_summary_requires_symmetric_cov(self):
        with pytest.raises(ShapeError):
            GaussianSummary(
                mean=np.zeros(2),
                cov=np.array([[1.0, 0.3], [0.0, 1.0]]),
                sample_count=9,
            )
