"""Median-deviation masking of trajectory samples with implausible speed.

A sample's mean speed is compared against the dataset median: each sample
gets an indicator |speed_mean - median| / median(|speed_mean - median|),
and samples whose indicator exceeds a threshold (default 3) are flagged for
removal.  When the median absolute difference is zero (at least half the
samples share the median speed) no sample is flagged, so a constant vector
with one extreme value still passes untouched.

The mask is fitted on whatever rows it is handed.  The evaluation pipeline
fits it on the full dataset before cross-validation, which lets test rows
influence the mask; reports carry a note to that effect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajfeat import COLUMN_INDEX, FeatureMatrix, FeatureVector, SampleRef

SPEED_MEAN_COLUMN = COLUMN_INDEX["speed_mean"]
DEFAULT_THRESHOLD = 3.0


@dataclass(frozen=True)
class NoiseMask:
    """Removal flags plus the statistics that produced them."""

    flags: np.ndarray
    threshold: float
    median: float
    median_difference: float
    per_mode: bool = False

    def removed_count(self) -> int:
        return int(np.count_nonzero(self.flags))


def speed_mean_of(row: FeatureVector | np.ndarray) -> float:
    """The mean-speed entry of one feature vector."""
    values = row.values if isinstance(row, FeatureVector) else np.asarray(row)
    return float(values[SPEED_MEAN_COLUMN])


def median_mask(speed_means, threshold: float = DEFAULT_THRESHOLD) -> NoiseMask:
    """Flag entries whose deviation from the median is extreme.

    Args:
        speed_means: per-sample mean speeds, non-empty.
        threshold: positive indicator cutoff; flags are strict exceedances.
    """
    xs = np.asarray(speed_means, dtype=float)
    if xs.size == 0:
        raise ValueError("empty speed vector")
    if threshold <= 0.0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    med = float(np.median(xs))
    difference = np.abs(xs - med)
    med_diff = float(np.median(difference))
    if med_diff == 0.0:
        flags = np.zeros(xs.size, dtype=bool)
    else:
        flags = (difference / med_diff) > threshold
    return NoiseMask(flags=flags, threshold=threshold, median=med, median_difference=med_diff)


def noise_mask_for(
    matrix: FeatureMatrix, threshold: float = DEFAULT_THRESHOLD, per_mode: bool = False
) -> NoiseMask:
    """Mask a feature matrix by its mean-speed column.

    Pooled over all rows by default.  With ``per_mode=True`` the mask is
    fitted within each label group separately and the summary statistics are
    reported as NaN since no single pooled median exists.
    """
    speeds = matrix.values[:, SPEED_MEAN_COLUMN]
    if not per_mode:
        return median_mask(speeds, threshold)
    flags = np.zeros(len(matrix), dtype=bool)
    labels = np.asarray(matrix.labels)
    for mode in sorted(set(matrix.labels)):
        idx = np.flatnonzero(labels == mode)
        flags[idx] = median_mask(speeds[idx], threshold).flags
    return NoiseMask(
        flags=flags,
        threshold=threshold,
        median=float("nan"),
        median_difference=float("nan"),
        per_mode=True,
    )


def apply_mask(matrix: FeatureMatrix, mask: NoiseMask) -> tuple[FeatureMatrix, list[SampleRef]]:
    """Drop flagged rows; returns the surviving matrix and the removed refs.

    Survivor order matches the input order.
    """
    if mask.flags.shape != (len(matrix),):
        raise ValueError(
            f"mask length {mask.flags.size} does not match matrix rows {len(matrix)}"
        )
    keep = np.flatnonzero(~mask.flags)
    removed = [matrix.refs[i] for i in np.flatnonzero(mask.flags)]
    return matrix.select(keep), removed


def mask_sidecar(mask: NoiseMask, removed: list[SampleRef], rows_before: int) -> dict:
    """JSON-ready summary of one masking pass."""
    return {
        "removed": [list(ref) for ref in removed],
        "threshold": mask.threshold,
        "median": None if np.isnan(mask.median) else mask.median,
        "median_difference": None if np.isnan(mask.median_difference) else mask.median_difference,
        "per_mode": mask.per_mode,
        "rows_before": rows_before,
        "rows_after": rows_before - len(removed),
    }
