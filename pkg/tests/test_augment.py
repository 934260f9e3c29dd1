"""Transform catalog semantics and the random projection embedder."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from noisescale.augment import (
    TRANSFORM_CATALOG,
    RandomProjectionEmbedder,
    TransformTuple,
    apply_transform,
)
from noisescale.exceptions import CatalogError, ConfigError, ShapeError

# recorded once from the implementation; guards against silent drift in
# the embedding weights or the tanh pipeline
GOLDEN_EMBEDDING = [
    1.0019542339141934,
    -0.029073301841345652,
    -0.2037164693809677,
    -0.7056685521276171,
]


def sample_images(n=12, width=4, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    return np.clip(rng.normal(0.5, 0.2, size=(n, width * width)), 0.0, 1.0)


def test_catalog_contents():
    assert len(TRANSFORM_CATALOG) == 6
    assert "horizontal_flip" in TRANSFORM_CATALOG


def test_tuple_validation():
    TransformTuple(transform="rotate", magnitude=0.5)
    with pytest.raises(CatalogError):
        TransformTuple(transform="posterize", magnitude=0.5)
    with pytest.raises(CatalogError):
        TransformTuple(transform="rotate", magnitude=1.5)
    with pytest.raises(CatalogError):
        TransformTuple(transform="rotate", magnitude=-0.1)


@pytest.mark.parametrize("name", TRANSFORM_CATALOG)
def test_zero_magnitude_is_bit_exact_identity(name):
    images = sample_images()
    rng = np.random.Generator(np.random.PCG64(1))
    out = apply_transform(TransformTuple(name, 0.0), images, rng=rng)
    assert np.array_equal(out, images)
    assert out is not images


def test_flip_twice_is_identity():
    images = sample_images()
    tup = TransformTuple("horizontal_flip", 1.0)
    assert np.array_equal(apply_transform(tup, apply_transform(tup, images)), images)


def test_brightness_rule_on_constant_image():
    images = np.full((3, 9), 0.4)
    out = apply_transform(TransformTuple("brightness", 0.5), images)
    assert_allclose(out, 0.65, rtol=1e-12)


def test_contrast_rule_expands_about_midpoint():
    images = np.full((1, 4), 0.75)
    out = apply_transform(TransformTuple("contrast", 1.0), images)
    # 0.5 + 2 * (0.75 - 0.5) = 1.0
    assert_allclose(out, 1.0, rtol=1e-12)


def test_outputs_stay_in_unit_interval():
    images = sample_images(n=20)
    rng = np.random.Generator(np.random.PCG64(2))
    for name in TRANSFORM_CATALOG:
        out = apply_transform(TransformTuple(name, 1.0), images, rng=rng)
        assert out.shape == images.shape
        assert out.min() >= 0.0 and out.max() <= 1.0


def test_gaussian_noise_needs_rng():
    with pytest.raises(ConfigError):
        apply_transform(TransformTuple("gaussian_noise", 0.5), sample_images())


def test_gaussian_noise_rule():
    images = np.full((2, 4), 0.5)
    rng = np.random.Generator(np.random.PCG64(3))
    out = apply_transform(TransformTuple("gaussian_noise", 0.8), images, rng=rng)
    expected = np.clip(
        images + 0.25 * 0.8 * np.random.Generator(np.random.PCG64(3)).normal(
            size=images.shape
        ),
        0.0,
        1.0,
    )
    assert_allclose(out, expected, rtol=1e-12)


def test_spatial_transforms_need_square_width():
    images = np.zeros((2, 10))
    with pytest.raises(ShapeError):
        apply_transform(TransformTuple("rotate", 0.5), images)
    # pixelwise transforms accept any width
    apply_transform(TransformTuple("brightness", 0.5), images)


def test_rotation_preserves_center_pixel():
    width = 5
    images = np.zeros((1, width * width))
    images[0, (width // 2) * width + width // 2] = 1.0
    out = apply_transform(TransformTuple("rotate", 1.0), images)
    grid = out.reshape(width, width)
    assert grid[width // 2, width // 2] > 0.5


def test_input_validation():
    with pytest.raises(ShapeError):
        apply_transform(TransformTuple("brightness", 0.5), np.zeros((2, 2, 2)))
    bad = np.full((1, 4), 1.5)
    with pytest.raises(ShapeError):
        apply_transform(TransformTuple("brightness", 0.5), bad)


class TestEmbedder:
    def test_identical_images_embed_identically(self):
        images = sample_images()
        embedder = RandomProjectionEmbedder(feature_dim=16, seed=0)
        out = embedder.embed(np.vstack([images[:1], images[:1]]))
        assert np.array_equal(out[0], out[1])

    def test_output_length_is_embed_dim(self):
        embedder = RandomProjectionEmbedder(feature_dim=16, embed_dim=7, seed=0)
        assert embedder.embed(sample_images(5)).shape == (5, 7)

    def test_golden_snapshot(self):
        img = np.arange(16, dtype=np.float64).reshape(1, 16) / 15.0
        embedder = RandomProjectionEmbedder(
            feature_dim=16, embed_dim=4, hidden_dim=8, seed=0
        )
        assert_allclose(embedder.embed(img)[0], GOLDEN_EMBEDDING, rtol=0, atol=0)

    def test_embed_dim_bounds(self):
        with pytest.raises(ConfigError):
            RandomProjectionEmbedder(feature_dim=16, embed_dim=0)
        with pytest.raises(ConfigError):
            RandomProjectionEmbedder(feature_dim=16, embed_dim=65)

    def test_feature_width_checked(self):
        embedder = RandomProjectionEmbedder(feature_dim=16, seed=0)
        with pytest.raises(ShapeError):
            embedder.embed(np.zeros((2, 9)))
