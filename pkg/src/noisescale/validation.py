"""Input validation helpers.

All array-accepting entry points in the package funnel through these so
that shape and finiteness problems surface as typed errors with readable
messages instead of numpy broadcasting surprises. Arrays are always
converted to C-contiguous float64; integer labels to int64.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NumericError, ShapeError


def as_vector(a, name: str = "array") -> np.ndarray:
    """Coerce to a 1-d float64 array."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise ShapeError(f"{name} must be 1-d, got shape {out.shape}")
    return out


def as_matrix(a, name: str = "array") -> np.ndarray:
    """Coerce to a 2-d float64 array."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ShapeError(f"{name} must be 2-d, got shape {out.shape}")
    return out


def as_square_matrix(a, name: str = "array") -> np.ndarray:
    out = as_matrix(a, name)
    if out.shape[0] != out.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {out.shape}")
    return out


def check_finite(a: np.ndarray, name: str = "array") -> np.ndarray:
    """Raise NumericError naming the first offending flat index."""
    if not np.all(np.isfinite(a)):
        flat = np.asarray(a).ravel()
        bad = int(np.flatnonzero(~np.isfinite(flat))[0])
        raise NumericError(
            f"{name} contains a non-finite value ({float(flat[bad])!r} "
            f"at flat index {bad})"
        )
    return a


def check_symmetric(a: np.ndarray, tol: float, name: str = "matrix") -> np.ndarray:
    dev = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if dev > tol:
        raise ShapeError(
            f"{name} must be symmetric within {tol:g}, max deviation {dev:g}"
        )
    return a


def check_psd(a: np.ndarray, name: str = "matrix", tol: float = 1e-10) -> np.ndarray:
    """Check symmetric positive semi-definiteness via eigenvalues."""
    check_symmetric(a, 1e-10, name)
    if a.size:
        smallest = float(np.linalg.eigvalsh(a)[0])
        if smallest < -tol * max(1.0, float(np.abs(a).max())):
            raise ShapeError(f"{name} must be positive semi-definite, "
                             f"smallest eigenvalue {smallest:g}")
    return a


def check_features(X, name: str = "X") -> np.ndarray:
    X = as_matrix(X, name)
    if X.shape[0] == 0:
        raise ShapeError(f"{name} must contain at least one row")
    check_finite(X, name)
    return X


def check_features_labels(X, y, name_x: str = "X", name_y: str = "y"):
    """Validate a feature matrix with integer class labels."""
    X = check_features(X, name_x)
    y = np.ascontiguousarray(y)
    if y.ndim != 1:
        raise ShapeError(f"{name_y} must be 1-d, got shape {y.shape}")
    if y.shape[0] != X.shape[0]:
        raise ShapeError(
            f"{name_x} and {name_y} row counts differ: {X.shape[0]} vs {y.shape[0]}"
        )
    if not np.issubdtype(y.dtype, np.integer):
        as_float = np.asarray(y, dtype=np.float64)
        check_finite(as_float, name_y)
        if not np.all(as_float == np.round(as_float)):
            raise ShapeError(f"{name_y} must hold integer class labels")
        y = as_float.astype(np.int64)
    else:
        y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise ShapeError(f"{name_y} labels must be nonnegative, got {int(y.min())}")
    return X, y


def check_unit_interval(X: np.ndarray, name: str = "images") -> np.ndarray:
    lo, hi = float(X.min()), float(X.max())
    if lo < 0.0 or hi > 1.0:
        raise ShapeError(f"{name} values must lie in [0, 1], got range [{lo:g}, {hi:g}]")
    return X
