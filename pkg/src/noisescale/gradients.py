"""Container for gradient evaluations on a batch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError
from .validation import as_matrix, as_vector


@dataclass(frozen=True, eq=False)
class ModelGradients:
    """Gradients of a mean loss over one batch.

    batch_grad is always the mean gradient over the batch. per_example,
    when present, holds one row per example and its column mean must agree
    with batch_grad; use `from_per_example` to get that by construction.
    """

    batch_grad: np.ndarray
    mean_loss: float
    batch_size: int
    per_example: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "batch_grad", as_vector(self.batch_grad, "batch_grad"))
        if self.batch_size < 1:
            raise ShapeError(f"batch_size must be positive, got {self.batch_size}")
        if self.per_example is not None:
            pe = as_matrix(self.per_example, "per_example")
            if pe.shape != (self.batch_size, self.batch_grad.shape[0]):
                raise ShapeError(
                    f"per_example has shape {pe.shape}, expected "
                    f"({self.batch_size}, {self.batch_grad.shape[0]})"
                )
            scale = max(1.0, float(np.abs(self.batch_grad).max()))
            dev = float(np.abs(pe.mean(axis=0) - self.batch_grad).max())
            if dev > 1e-10 * scale:
                raise ShapeError(
                    f"per_example mean deviates from batch_grad by {dev:g}"
                )
            object.__setattr__(self, "per_example", pe)

    @classmethod
    def from_per_example(cls, per_example, mean_loss: float) -> "ModelGradients":
        pe = as_matrix(per_example, "per_example")
        return cls(
            batch_grad=pe.mean(axis=0),
            mean_loss=float(mean_loss),
            batch_size=pe.shape[0],
            per_example=pe,
        )
