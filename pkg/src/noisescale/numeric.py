"""Dense numeric kernels and the flat parameter container.

Matrices are plain row-major float64 numpy arrays; the helpers here add
shape checking and typed errors on top of numpy, they do not reimplement
the arithmetic. `finite_diff_gradient` is deliberately the slow, obvious
central difference loop: it exists as an independent oracle for the
analytic gradients elsewhere in the package, so it must stay free of any
code shared with them.
"""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

import numpy as np

from .exceptions import NumericError, ShapeError
from .validation import as_matrix, as_vector, check_finite


def matmul(a, b) -> np.ndarray:
    """Matrix product with explicit shape validation.

    Parameters
    ----------
    a : array_like, shape (n, k)
    b : array_like, shape (k, m)

    Returns
    -------
    ndarray, shape (n, m)
        Row-major float64 product.

    Raises
    ------
    ShapeError
        If either operand is not 2-d or the inner dimensions disagree.
        The message names both shapes.
    """
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape} by {b.shape}: "
            f"inner dimensions {a.shape[1]} and {b.shape[0]} differ"
        )
    return a @ b


def finite_diff_gradient(
    f: Callable[[np.ndarray], float],
    theta,
    h: float = 1e-5,
) -> np.ndarray:
    """Central finite difference gradient of a scalar function.

    Evaluates (f(theta + h e_i) - f(theta - h e_i)) / (2 h) one coordinate
    at a time. Intended as a correctness oracle, not for production use:
    it costs two function evaluations per parameter.

    Parameters
    ----------
    f : callable
        Maps a 1-d float64 array to a float.
    theta : array_like, shape (p,)
        Point at which to differentiate. Not modified.
    h : float
        Step size, must be positive.

    Returns
    -------
    ndarray, shape (p,)

    Raises
    ------
    NumericError
        If any difference quotient comes out non-finite; the message names
        the offending coordinate.
    """
    theta = as_vector(theta, "theta").copy()
    if not (h > 0.0):
        raise ShapeError(f"finite difference step must be positive, got {h!r}")
    grad = np.empty_like(theta)
    for i in range(theta.shape[0]):
        orig = theta[i]
        theta[i] = orig + h
        hi = f(theta)
        theta[i] = orig - h
        lo = f(theta)
        theta[i] = orig
        grad[i] = (hi - lo) / (2.0 * h)
        if not np.isfinite(grad[i]):
            raise NumericError(
                f"finite difference at coordinate {i} is non-finite "
                f"(f+ = {hi!r}, f- = {lo!r})"
            )
    return grad


class ParameterVector:
    """A flat float64 parameter vector with named, ordered segments.

    The flat layout is what optimizers and gradient estimators work on;
    the named segments are what layerwise logic (trust ratios, per layer
    reporting) indexes into. Segment names are unique and order is part
    of the identity: two vectors with the same names in a different order
    do not share a layout.

    Instances are immutable; updates go through `with_values`, which
    reuses the layout.
    """

    __slots__ = ("_values", "_names", "_slices")

    def __init__(self, names: Sequence[str], values: np.ndarray,
                 _slices: tuple[slice, ...] | None = None):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ShapeError(f"segment names must be unique, got {names!r}")
        values = as_vector(values, "values")
        if _slices is None:
            raise ShapeError("construct with ParameterVector.from_segments or with_values")
        self._names = names
        self._slices = _slices
        self._values = values
        self._values.setflags(write=False)

    @classmethod
    def from_segments(cls, segments: Sequence[tuple[str, np.ndarray]]) -> "ParameterVector":
        """Build from ordered (name, values) pairs. Segment arrays are
        flattened in row-major order."""
        names = []
        parts = []
        slices = []
        offset = 0
        for name, part in segments:
            flat = np.ascontiguousarray(part, dtype=np.float64).ravel()
            names.append(str(name))
            parts.append(flat)
            slices.append(slice(offset, offset + flat.shape[0]))
            offset += flat.shape[0]
        values = np.concatenate(parts) if parts else np.empty(0)
        return cls(names, values, _slices=tuple(slices))

    def with_values(self, values) -> "ParameterVector":
        """Same layout, new numbers."""
        values = as_vector(values, "values")
        if values.shape[0] != self.total_len:
            raise ShapeError(
                f"replacement values have length {values.shape[0]}, "
                f"layout needs {self.total_len}"
            )
        return ParameterVector(self._names, values.copy(), _slices=self._slices)

    @property
    def values(self) -> np.ndarray:
        """The flat read-only float64 array."""
        return self._values

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def total_len(self) -> int:
        return self._values.shape[0]

    def segment(self, name: str) -> np.ndarray:
        """Read-only view of one named segment."""
        try:
            idx = self._names.index(name)
        except ValueError:
            raise KeyError(f"no segment named {name!r}; have {self._names!r}") from None
        return self._values[self._slices[idx]]

    def segment_slices(self) -> tuple[tuple[str, slice], ...]:
        """(name, slice into the flat vector) pairs, in layout order."""
        return tuple(zip(self._names, self._slices))

    def segments(self) -> Iterator[tuple[str, np.ndarray]]:
        for name, sl in zip(self._names, self._slices):
            yield name, self._values[sl]

    def check_finite(self) -> "ParameterVector":
        check_finite(self._values, "parameter vector")
        return self

    def __len__(self) -> int:
        return self.total_len

    def __repr__(self) -> str:
        segs = ", ".join(f"{n}[{sl.stop - sl.start}]"
                         for n, sl in zip(self._names, self._slices))
        return f"ParameterVector({segs})"
