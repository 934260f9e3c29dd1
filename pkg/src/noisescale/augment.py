"""Image transform catalog and the fixed random embedder.

Images are rows of pixel values in [0, 1]. Pixelwise transforms work on
any row width; the spatial ones (horizontal_flip, rotate, zoom) interpret
each row as a square grayscale image and refuse widths that are not
perfect squares. Every transform at magnitude 0 is the identity, bit for
bit. Magnitudes live in [0, 1] and map to a fixed maximum effect per
transform:

  horizontal_flip  any positive magnitude mirrors the columns
  rotate           rotation about the center by magnitude * 30 degrees,
                   bilinear resampling, edge pixels extended
  brightness       pixel + 0.5 * magnitude, clamped
  contrast         0.5 + (1 + magnitude) * (pixel - 0.5), clamped
  gaussian_noise   pixel + 0.25 * magnitude * z with z standard normal
                   from the caller's generator, clamped
  zoom             central crop to a fraction 1 - 0.5 * magnitude of the
                   side, resampled back up bilinearly

The embedder is a small fixed randomly-initialized projection network,
not a trained feature extractor; it only needs to be a deterministic,
reasonably generic map under which different augmentations separate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CatalogError, ConfigError, ShapeError
from .validation import as_matrix, check_finite, check_unit_interval

TRANSFORM_CATALOG = (
    "horizontal_flip",
    "rotate",
    "brightness",
    "contrast",
    "gaussian_noise",
    "zoom",
)

MAX_ROTATE_DEGREES = 30.0
BRIGHTNESS_DELTA_SCALE = 0.5
NOISE_SIGMA_SCALE = 0.25
MAX_ZOOM_CROP = 0.5
MAX_EMBED_DIM = 64


@dataclass(frozen=True)
class TransformTuple:
    """One (transform, magnitude) point in the search space."""

    transform: str
    magnitude: float

    def __post_init__(self):
        if self.transform not in TRANSFORM_CATALOG:
            raise CatalogError(
                f"unknown transform {self.transform!r}; "
                f"catalog is {TRANSFORM_CATALOG}"
            )
        m = float(self.magnitude)
        if not (0.0 <= m <= 1.0):
            raise CatalogError(
                f"magnitude must lie in [0, 1], got {m!r} for {self.transform!r}"
            )
        object.__setattr__(self, "magnitude", m)


def _as_square_images(images: np.ndarray, transform: str) -> tuple[np.ndarray, int]:
    d = images.shape[1]
    side = math.isqrt(d)
    if side * side != d:
        raise ShapeError(
            f"{transform} needs square images; row width {d} is not a perfect square"
        )
    return images.reshape(images.shape[0], side, side), side


def _bilinear_sample(grids: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample (N, s, s) grids at fractional coordinates, edge padded."""
    side = grids.shape[1]
    ys = np.clip(ys, 0.0, side - 1.0)
    xs = np.clip(xs, 0.0, side - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, side - 1)
    x1 = np.minimum(x0 + 1, side - 1)
    wy = ys - y0
    wx = xs - x0
    top = (1.0 - wx) * grids[:, y0, x0] + wx * grids[:, y0, x1]
    bottom = (1.0 - wx) * grids[:, y1, x0] + wx * grids[:, y1, x1]
    return (1.0 - wy) * top + wy * bottom


def apply_transform(
    tup: TransformTuple,
    images,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Apply one transform at its magnitude to every image row.

    Always returns a fresh array with values in [0, 1]. gaussian_noise at
    a positive magnitude is the only transform that consumes randomness
    and therefore requires `rng`; everything else is a pure function of
    (transform, magnitude, images).
    """
    images = as_matrix(images, "images")
    check_finite(images, "images")
    check_unit_interval(images, "images")
    m = tup.magnitude
    if m == 0.0:
        return images.copy()

    name = tup.transform
    if name == "brightness":
        return np.clip(images + BRIGHTNESS_DELTA_SCALE * m, 0.0, 1.0)
    if name == "contrast":
        return np.clip(0.5 + (1.0 + m) * (images - 0.5), 0.0, 1.0)
    if name == "gaussian_noise":
        if rng is None:
            raise ConfigError("gaussian_noise at positive magnitude needs an rng")
        noise = rng.standard_normal(size=images.shape)
        return np.clip(images + NOISE_SIGMA_SCALE * m * noise, 0.0, 1.0)

    grids, side = _as_square_images(images, name)
    if name == "horizontal_flip":
        return grids[:, :, ::-1].reshape(images.shape).copy()
    center = (side - 1) / 2.0
    cols, rows = np.meshgrid(np.arange(side, dtype=np.float64),
                             np.arange(side, dtype=np.float64))
    if name == "rotate":
        angle = math.radians(MAX_ROTATE_DEGREES * m)
        cos, sin = math.cos(angle), math.sin(angle)
        dx = cols - center
        dy = rows - center
        xs = center + cos * dx + sin * dy
        ys = center - sin * dx + cos * dy
    else:  # zoom
        fraction = 1.0 - MAX_ZOOM_CROP * m
        xs = center + (cols - center) * fraction
        ys = center + (rows - center) * fraction
    out = _bilinear_sample(grids, ys, xs)
    return np.clip(out.reshape(images.shape), 0.0, 1.0)


class RandomProjectionEmbedder:
    """Fixed random two-layer projection used to summarize datasets.

    The weights are drawn once from the seed and never trained. The map
    is x -> tanh(x W1 + b1) W2, with W1 scaled by 1/sqrt(input dim) and
    W2 by 1/sqrt(hidden dim) so outputs stay O(1) for inputs in [0, 1].
    Embedding width is capped at 64; summaries in higher dimension need
    more samples than the datasets this package targets can provide.
    """

    def __init__(self, feature_dim: int, embed_dim: int = 16,
                 hidden_dim: int = 32, seed: int = 0):
        if feature_dim < 1:
            raise ConfigError(f"feature_dim must be positive, got {feature_dim}")
        if not (1 <= embed_dim <= MAX_EMBED_DIM):
            raise ConfigError(
                f"embed_dim must lie in [1, {MAX_EMBED_DIM}], got {embed_dim}"
            )
        if hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be positive, got {hidden_dim}")
        self.feature_dim = int(feature_dim)
        self.embed_dim = int(embed_dim)
        self.hidden_dim = int(hidden_dim)
        self.seed = int(seed)
        rng = np.random.Generator(np.random.PCG64(self.seed))
        self._w1 = rng.normal(0.0, 1.0 / math.sqrt(feature_dim),
                              size=(feature_dim, hidden_dim))
        self._b1 = rng.normal(0.0, 0.5, size=hidden_dim)
        self._w2 = rng.normal(0.0, 1.0 / math.sqrt(hidden_dim),
                              size=(hidden_dim, embed_dim))

    def embed(self, images) -> np.ndarray:
        """Map image rows to embedding rows."""
        images = as_matrix(images, "images")
        if images.shape[1] != self.feature_dim:
            raise ShapeError(
                f"images have {images.shape[1]} columns, "
                f"embedder expects {self.feature_dim}"
            )
        check_finite(images, "images")
        return np.tanh(images @ self._w1 + self._b1) @ self._w2
