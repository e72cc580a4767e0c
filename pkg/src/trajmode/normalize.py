"""Column-wise min-max scaling fitted on training rows only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajfeat import FeatureMatrix


@dataclass(frozen=True)
class MinMaxParams:
    """Per-column minima and maxima learned from a training matrix."""

    mins: np.ndarray
    maxs: np.ndarray
    fitted_on: int

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
            "fitted_on": self.fitted_on,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MinMaxParams":
        return cls(
            mins=np.asarray(data["mins"], dtype=float),
            maxs=np.asarray(data["maxs"], dtype=float),
            fitted_on=int(data["fitted_on"]),
        )


def fit_minmax(train: FeatureMatrix) -> MinMaxParams:
    """Learn per-column ranges from a non-empty training matrix."""
    if len(train) == 0:
        raise ValueError("cannot fit scaling on an empty matrix")
    return MinMaxParams(
        mins=train.values.min(axis=0),
        maxs=train.values.max(axis=0),
        fitted_on=len(train),
    )


def transform(params: MinMaxParams, matrix: FeatureMatrix) -> FeatureMatrix:
    """Scale a matrix to the fitted ranges.

    Training columns map into [0, 1]; rows outside the fitted range are not
    clamped, so unseen extremes land below 0 or above 1.  Columns that were
    constant at fit time map to 0.
    """
    if params.mins.shape[0] != matrix.values.shape[1]:
        raise ValueError(
            f"scaling fitted on {params.mins.shape[0]} columns, "
            f"matrix has {matrix.values.shape[1]}"
        )
    span = params.maxs - params.mins
    safe = np.where(span > 0.0, span, 1.0)
    scaled = (matrix.values - params.mins) / safe
    scaled[:, span <= 0.0] = 0.0
    return FeatureMatrix(scaled, list(matrix.labels), list(matrix.refs))
