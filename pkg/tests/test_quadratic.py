"""Noisy quadratic model: analytic values, sampling, and the model file."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from noisescale import quadratic
from noisescale.exceptions import DataFormatError, DegenerateInputError, ShapeError


def iso_spec(dim=2, noise=1.0, seed=0):
    return quadratic.QuadraticSpec(
        dim=dim,
        hessian=np.eye(dim),
        noise_cov=noise * np.eye(dim),
        center=np.zeros(dim),
        seed=seed,
    )


def test_identity_case_closed_form():
    # |theta - center|^2 = 25 in 2-d with H = I, Sigma = I
    spec = iso_spec()
    scales = quadratic.true_noise_scale(spec, np.array([3.0, 4.0]))
    assert_allclose(scales.b_noise, 2 / 25, rtol=1e-12)
    assert_allclose(scales.b_simple, 2 / 25, rtol=1e-12)


def test_noiseless_scales_are_zero():
    spec = quadratic.QuadraticSpec(
        dim=2, hessian=np.eye(2), noise_cov=np.zeros((2, 2)),
        center=np.zeros(2), seed=0,
    )
    scales = quadratic.true_noise_scale(spec, np.array([1.0, 1.0]))
    assert scales.b_noise == 0.0
    assert scales.b_simple == 0.0


def test_anisotropic_case_matches_explicit_arithmetic():
    H = np.diag([1.0, 4.0])
    S = np.diag([2.0, 2.0])
    spec = quadratic.QuadraticSpec(
        dim=2, hessian=H, noise_cov=S, center=np.zeros(2), seed=0
    )
    theta = np.array([1.0, 1.0])
    g = H @ theta
    expected_noise = np.trace(H @ S) / (g @ H @ g)
    expected_simple = np.trace(S) / (g @ g)
    scales = quadratic.true_noise_scale(spec, theta)
    assert_allclose(scales.b_noise, expected_noise, rtol=1e-12)
    assert_allclose(scales.b_simple, expected_simple, rtol=1e-12)
    # the two definitions really do part ways off the isotropic case
    assert abs(scales.b_noise - scales.b_simple) > 1e-3


def test_zero_gradient_is_degenerate():
    spec = iso_spec()
    with pytest.raises(DegenerateInputError):
        quadratic.true_noise_scale(spec, np.zeros(2))


def test_loss_and_gradient():
    spec = iso_spec()
    theta = np.array([3.0, 4.0])
    assert_allclose(quadratic.loss(spec, theta), 12.5)
    assert_allclose(quadratic.gradient(spec, theta), theta)


def test_noiseless_samples_equal_true_gradient():
    spec = quadratic.QuadraticSpec(
        dim=3, hessian=np.diag([1.0, 2.0, 3.0]), noise_cov=np.zeros((3, 3)),
        center=np.ones(3), seed=0,
    )
    theta = np.array([2.0, 2.0, 2.0])
    rng = np.random.Generator(np.random.PCG64(0))
    grads = quadratic.sample_gradients(spec, theta, 4, rng, want_per_example=True)
    expected = spec.hessian @ (theta - spec.center)
    assert_allclose(grads.batch_grad, expected, rtol=0)
    for row in grads.per_example:
        assert_allclose(row, expected, rtol=0)


def test_sample_mean_converges_to_true_gradient():
    # theta - center = (3, 4); mean over 10^5 unit-noise draws within 3 sigma
    spec = iso_spec()
    theta = np.array([3.0, 4.0])
    rng = np.random.Generator(np.random.PCG64(42))
    draws = 100_000
    grads = quadratic.sample_gradients(spec, theta, draws, rng, want_per_example=True)
    bound = 3.0 / np.sqrt(draws)
    assert np.abs(grads.per_example.mean(axis=0) - theta).max() < bound


def test_sampling_is_seed_deterministic():
    spec = iso_spec(dim=4)
    theta = np.ones(4)
    a = quadratic.sample_gradients(
        spec, theta, 8, np.random.Generator(np.random.PCG64(3))
    )
    b = quadratic.sample_gradients(
        spec, theta, 8, np.random.Generator(np.random.PCG64(3))
    )
    assert np.array_equal(a.batch_grad, b.batch_grad)


def test_max_useful_step_and_expected_loss():
    H = np.diag([1.0, 4.0])
    spec = quadratic.QuadraticSpec(
        dim=2, hessian=H, noise_cov=np.eye(2), center=np.zeros(2), seed=0
    )
    theta = np.array([1.0, 1.0])
    g = H @ theta
    eps_max = float(g @ g) / float(g @ H @ g)
    assert_allclose(quadratic.max_useful_step(spec, theta), eps_max, rtol=1e-12)

    # one full formula evaluation by hand
    eps, batch = 0.05, 4
    expected = (
        quadratic.loss(spec, theta)
        - eps * float(g @ g)
        + 0.5 * eps ** 2 * (float(g @ H @ g) + np.trace(H @ np.eye(2)) / batch)
    )
    got = quadratic.expected_loss_after_step(spec, theta, eps, batch)
    assert_allclose(got, expected, rtol=1e-12)


def test_spec_requires_spd_hessian():
    with pytest.raises(ShapeError):
        quadratic.QuadraticSpec(
            dim=2, hessian=np.diag([1.0, -1.0]), noise_cov=np.eye(2),
            center=np.zeros(2), seed=0,
        )


def test_spec_requires_symmetric_noise():
    with pytest.raises(ShapeError):
        quadratic.QuadraticSpec(
            dim=2, hessian=np.eye(2), noise_cov=np.array([[1.0, 0.5], [0.0, 1.0]]),
            center=np.zeros(2), seed=0,
        )


class TestSpecFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.Generator(np.random.PCG64(0))
        w = rng.normal(size=(3, 3))
        spec = quadratic.QuadraticSpec(
            dim=3,
            hessian=w @ w.T + 3.0 * np.eye(3),
            noise_cov=0.5 * np.eye(3),
            center=rng.normal(size=3),
            seed=7,
        )
        path = tmp_path / "model.kv"
        quadratic.save_quadratic_spec(spec, path)
        back = quadratic.load_quadratic_spec(path)
        assert back.dim == 3 and back.seed == 7
        assert np.array_equal(back.hessian, spec.hessian)
        assert np.array_equal(back.noise_cov, spec.noise_cov)
        assert np.array_equal(back.center, spec.center)

    def test_missing_key_is_named(self, tmp_path):
        path = tmp_path / "model.kv"
        path.write_text("dim = 2\ncenter = 0 0\n")
        with pytest.raises(DataFormatError, match="hessian"):
            quadratic.load_quadratic_spec(path)

    def test_wrong_count_is_rejected(self, tmp_path):
        path = tmp_path / "model.kv"
        path.write_text(
            "dim = 2\nhessian = 1 0 0\nnoise_cov = 1 0 0 1\ncenter = 0 0\n"
        )
        with pytest.raises(DataFormatError, match="hessian"):
            quadratic.load_quadratic_spec(path)

    def test_unknown_key_is_rejected(self, tmp_path):
        path = tmp_path / "model.kv"
        path.write_text(
            "dim = 2\nhessian = 1 0 0 1\nnoise_cov = 1 0 0 1\n"
            "center = 0 0\nextra = 5\n"
        )
        with pytest.raises(DataFormatError, match="extra"):
            quadratic.load_quadratic_spec(path)
