"""Fixed-width feature vectors summarizing the per-point series.

Each of the seven kinematic series is reduced to ten order statistics,
giving a 70-value vector laid out as feature_index * 10 + stat_index.
Stat order: min, max, mean, median, std, p10, p25, p50, p75, p90.
Median of an even-length series is the mean of the two middle order
statistics, std is the population form (divide by n), and percentiles use
linear interpolation at rank r = (n - 1) * p / 100.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .ingest import TrajectorySample
from .pointfeat import FEATURE_NAMES, PointFeatureSeries, compute_point_features

STAT_NAMES = ("min", "max", "mean", "median", "std", "p10", "p25", "p50", "p75", "p90")
PERCENTILE_LEVELS = (10.0, 25.0, 50.0, 75.0, 90.0)

COLUMN_NAMES: tuple[str, ...] = tuple(
    f"{feature}_{stat}" for feature in FEATURE_NAMES for stat in STAT_NAMES
)
COLUMN_INDEX = {name: i for i, name in enumerate(COLUMN_NAMES)}
N_COLUMNS = len(COLUMN_NAMES)

CSV_HEADER: tuple[str, ...] = ("user_id", "mode", *COLUMN_NAMES)


class SampleRef(NamedTuple):
    """Provenance key of a feature row: (user_id, ISO day, ordinal in day)."""

    user_id: str
    day: str
    ordinal: int


@dataclass(frozen=True)
class FeatureVector:
    """One sample's 70 summary values plus its label and provenance."""

    values: np.ndarray
    label: str
    sample_ref: SampleRef


@dataclass
class FeatureMatrix:
    """Row-aligned feature values, labels and provenance for a dataset."""

    values: np.ndarray
    labels: list[str]
    refs: list[SampleRef]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1, N_COLUMNS)
        if not (len(self.labels) == len(self.refs) == self.values.shape[0]):
            raise ValueError("values, labels and refs must have equal length")

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "FeatureMatrix":
        if not vectors:
            return cls(np.empty((0, N_COLUMNS)), [], [])
        return cls(
            np.stack([v.values for v in vectors]),
            [v.label for v in vectors],
            [v.sample_ref for v in vectors],
        )

    def column(self, name: str) -> np.ndarray:
        return self.values[:, COLUMN_INDEX[name]]

    def select(self, indices) -> "FeatureMatrix":
        """Row subset in the given index order."""
        indices = np.asarray(indices, dtype=int)
        return FeatureMatrix(
            self.values[indices],
            [self.labels[i] for i in indices],
            [self.refs[i] for i in indices],
        )


def global_stats(series) -> tuple[float, float, float, float, float]:
    """(min, max, mean, median, population std) of a non-empty series."""
    xs = np.asarray(series, dtype=float)
    if xs.size == 0:
        raise ValueError("empty series")
    return (
        float(xs.min()),
        float(xs.max()),
        float(xs.mean()),
        float(np.median(xs)),
        float(xs.std()),
    )


def percentiles(series, levels=PERCENTILE_LEVELS, method: str = "linear") -> np.ndarray:
    """Percentiles of a non-empty series.

    ``linear`` interpolates at rank r = (n - 1) * p / 100 between the
    bracketing order statistics; ``nearest_rank`` takes the ceil(p/100 * n)-th
    order statistic (1-based) as a sensitivity alternative.
    """
    xs = np.sort(np.asarray(series, dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("empty series")
    ps = np.asarray(levels, dtype=float)
    if np.any(ps < 0.0) or np.any(ps > 100.0):
        raise ValueError("percentile levels must lie in [0, 100]")
    if method == "linear":
        r = (n - 1) * ps / 100.0
        lo = np.floor(r).astype(int)
        hi = np.minimum(lo + 1, n - 1)
        frac = r - lo
        return xs[lo] + frac * (xs[hi] - xs[lo])
    if method == "nearest_rank":
        ranks = np.maximum(np.ceil(ps / 100.0 * n).astype(int), 1)
        return xs[ranks - 1]
    raise ValueError(f"unknown percentile method {method!r}")


def sample_refs(samples: Sequence[TrajectorySample]) -> list[SampleRef]:
    """Provenance keys for a sample list: ordinal counts per (user, day)."""
    counters: dict[tuple[str, str], int] = {}
    refs = []
    for s in samples:
        key = (s.user_id, s.day.isoformat())
        ordinal = counters.get(key, 0)
        counters[key] = ordinal + 1
        refs.append(SampleRef(key[0], key[1], ordinal))
    return refs


def featurize(
    series: PointFeatureSeries, label: str, sample_ref: SampleRef, percentile_method: str = "linear"
) -> FeatureVector:
    """Summarize one sample's series into the 70-value vector."""
    out = np.empty(N_COLUMNS)
    for fi, xs in enumerate(series.series()):
        base = fi * len(STAT_NAMES)
        out[base : base + 5] = global_stats(xs)
        out[base + 5 : base + 10] = percentiles(xs, method=percentile_method)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"non-finite feature value for sample {sample_ref}")
    return FeatureVector(out, label, sample_ref)


def featurize_samples(
    samples: Sequence[TrajectorySample],
    wrap_bearing_diff: bool = False,
    percentile_method: str = "linear",
) -> FeatureMatrix:
    """Featurize a sample list; row order follows the input order."""
    refs = sample_refs(samples)
    vectors = [
        featurize(
            compute_point_features(s, wrap_bearing_diff=wrap_bearing_diff),
            s.mode,
            ref,
            percentile_method=percentile_method,
        )
        for s, ref in zip(samples, refs)
    ]
    return FeatureMatrix.from_vectors(vectors)


def write_feature_csv(matrix: FeatureMatrix, path) -> int:
    """Write the 72-column feature CSV; returns the row count."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row, label, ref in zip(matrix.values, matrix.labels, matrix.refs):
            writer.writerow([ref.user_id, label, *[repr(float(v)) for v in row]])
    return len(matrix)


def read_feature_csv(path) -> FeatureMatrix:
    """Read a feature CSV back into a FeatureMatrix.

    The day component of provenance is not stored in the CSV, so refs come
    back as (user_id, "", row_index).
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ValueError(f"{path}: empty feature file") from None
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected feature header")
        values: list[list[float]] = []
        labels: list[str] = []
        refs: list[SampleRef] = []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"{path}: row {i + 2} has {len(row)} columns")
            try:
                values.append([float(v) for v in row[2:]])
            except ValueError:
                raise ValueError(f"{path}: row {i + 2} has a non-numeric value") from None
            labels.append(row[1])
            refs.append(SampleRef(row[0], "", i))
    if not values:
        return FeatureMatrix(np.empty((0, N_COLUMNS)), [], [])
    return FeatureMatrix(np.asarray(values), labels, refs)


def assert_finite_matrix(matrix: FeatureMatrix) -> None:
    """Raise if any cell is NaN or infinite (names the first offending row)."""
    bad = ~np.isfinite(matrix.values)
    if bad.any():
        row = int(np.argwhere(bad)[0, 0])
        raise ValueError(f"non-finite feature value at row {row} ({matrix.refs[row]})")
