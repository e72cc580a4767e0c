"""Whole-series statistics, the 70-column layout and the feature CSV."""

import math
import statistics
from datetime import date, datetime, timedelta

import numpy as np
import pytest

from trajmode import trajfeat
from trajmode.ingest import GpsPoint, TrajectorySample
from trajmode.pointfeat import FEATURE_NAMES, compute_point_features
from trajmode.trajfeat import (
    COLUMN_INDEX,
    COLUMN_NAMES,
    CSV_HEADER,
    FeatureMatrix,
    FeatureVector,
    SampleRef,
)


def linear_percentile_oracle(values, p):
    s = sorted(values)
    n = len(s)
    r = (n - 1) * p / 100.0
    lo = math.floor(r)
    hi = min(lo + 1, n - 1)
    return s[lo] + (r - lo) * (s[hi] - s[lo])


def nearest_rank_oracle(values, p):
    s = sorted(values)
    rank = max(1, math.ceil(p / 100.0 * len(s)))
    return s[rank - 1]


def random_series(rng):
    n = int(rng.integers(1, 60))
    if rng.uniform() < 0.3:  # ties
        return rng.integers(0, 5, size=n).astype(float)
    return rng.normal(0.0, 10.0, size=n)


def walk_sample(rng, n=20, user="000"):
    t0 = datetime(2008, 5, 1, 8, 0, 0)
    pts = []
    lat, lon = 39.9, 116.4
    for i in range(n):
        lat += float(rng.uniform(0.5, 2.0)) * 1e-5
        lon += float(rng.uniform(-1.0, 1.0)) * 1e-5
        pts.append(GpsPoint(user, lat, lon, 50.0, t0 + timedelta(seconds=i)))
    return TrajectorySample(user, date(2008, 5, 1), "walk", tuple(pts))


def test_percentiles_match_sort_based_oracle_exactly():
    rng = np.random.default_rng(19)
    for _ in range(500):
        series = random_series(rng)
        got = trajfeat.percentiles(series)
        want = [linear_percentile_oracle(series, p) for p in trajfeat.PERCENTILE_LEVELS]
        assert got.tolist() == want
        np.testing.assert_allclose(got, np.percentile(series, trajfeat.PERCENTILE_LEVELS), rtol=1e-12)


def test_nearest_rank_percentiles_match_oracle_exactly():
    rng = np.random.default_rng(23)
    for _ in range(500):
        series = random_series(rng)
        got = trajfeat.percentiles(series, method="nearest_rank")
        want = [nearest_rank_oracle(series, p) for p in trajfeat.PERCENTILE_LEVELS]
        assert got.tolist() == want


def test_percentiles_reject_unknown_method_and_empty_series():
    with pytest.raises(ValueError):
        trajfeat.percentiles([1.0, 2.0], method="midpoint")
    with pytest.raises(ValueError):
        trajfeat.percentiles([])


def test_global_stats_against_stdlib():
    rng = np.random.default_rng(29)
    for _ in range(200):
        series = random_series(rng)
        lo, hi, mean, median, std = trajfeat.global_stats(series)
        vals = series.tolist()
        assert lo == min(vals)
        assert hi == max(vals)
        assert math.isclose(mean, statistics.fmean(vals), rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(median, statistics.median(vals), rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(std, statistics.pstdev(vals), rel_tol=1e-9, abs_tol=1e-12)


def test_column_layout():
    assert len(COLUMN_NAMES) == 70
    assert len(set(COLUMN_NAMES)) == 70
    assert trajfeat.N_COLUMNS == 70
    # feature-major order: all ten statistics of one series stay adjacent
    stats = ("min", "max", "mean", "median", "std", "p10", "p25", "p50", "p75", "p90")
    assert trajfeat.STAT_NAMES == stats
    for fi, feature in enumerate(FEATURE_NAMES):
        for si, stat in enumerate(stats):
            assert COLUMN_NAMES[fi * 10 + si] == f"{feature}_{stat}"
    assert COLUMN_INDEX["speed_mean"] == 12
    assert CSV_HEADER[:2] == ("user_id", "mode")
    assert CSV_HEADER[2:] == COLUMN_NAMES


def test_featurize_vector_contract():
    rng = np.random.default_rng(31)
    sample = walk_sample(rng)
    vec = trajfeat.featurize(
        compute_point_features(sample), sample.mode, SampleRef("000", "2008-05-01", 0)
    )
    assert isinstance(vec, FeatureVector)
    assert vec.values.shape == (70,)
    assert np.all(np.isfinite(vec.values))
    assert vec.label == "walk"
    for feature in FEATURE_NAMES:
        get = lambda stat: vec.values[COLUMN_INDEX[f"{feature}_{stat}"]]
        assert abs(get("p50") - get("median")) <= 1e-9
        chain = [get("min"), get("p10"), get("p25"), get("p50"), get("p75"), get("p90"), get("max")]
        assert chain == sorted(chain)
        assert get("min") <= get("mean") <= get("max")
        assert get("std") >= 0.0


def test_sample_refs_number_repeats():
    rng = np.random.default_rng(5)
    samples = [walk_sample(rng), walk_sample(rng), walk_sample(rng, user="001")]
    refs = trajfeat.sample_refs(samples)
    assert refs == [
        SampleRef("000", "2008-05-01", 0),
        SampleRef("000", "2008-05-01", 1),
        SampleRef("001", "2008-05-01", 0),
    ]


def test_matrix_select_and_column():
    rng = np.random.default_rng(37)
    samples = [walk_sample(rng) for _ in range(5)]
    matrix = trajfeat.featurize_samples(samples)
    assert len(matrix) == 5
    sub = matrix.select([0, 2])
    assert len(sub) == 2
    np.testing.assert_array_equal(sub.values, matrix.values[[0, 2]])
    assert sub.refs == [matrix.refs[0], matrix.refs[2]]
    np.testing.assert_array_equal(
        matrix.column("speed_mean"), matrix.values[:, COLUMN_INDEX["speed_mean"]]
    )
    with pytest.raises(KeyError):
        matrix.column("speed_p95")


def test_csv_round_trip_exact(tmp_path):
    rng = np.random.default_rng(41)
    samples = [walk_sample(rng) for _ in range(8)]
    matrix = trajfeat.featurize_samples(samples)
    path = tmp_path / "features.csv"
    n = trajfeat.write_feature_csv(matrix, path)
    assert n == 8

    header = path.read_text().splitlines()[0]
    assert header == ",".join(CSV_HEADER)

    back = trajfeat.read_feature_csv(path)
    np.testing.assert_array_equal(back.values, matrix.values)  # repr round trip is lossless
    assert back.labels == matrix.labels

    again = tmp_path / "again.csv"
    trajfeat.write_feature_csv(matrix, again)
    assert again.read_bytes() == path.read_bytes()


def test_read_feature_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("user_id,mode,speed\n000,walk,1.0\n")
    with pytest.raises(ValueError):
        trajfeat.read_feature_csv(path)


def test_assert_finite_matrix_names_the_offender():
    rng = np.random.default_rng(43)
    matrix = trajfeat.featurize_samples([walk_sample(rng), walk_sample(rng)])
    trajfeat.assert_finite_matrix(matrix)
    bad = FeatureMatrix(matrix.values.copy(), list(matrix.labels), list(matrix.refs))
    bad.values[1, 3] = np.nan
    with pytest.raises(ValueError) as err:
        trajfeat.assert_finite_matrix(bad)
    assert "000" in str(err.value)


def test_featurize_samples_percentile_method_flows_through():
    rng = np.random.default_rng(47)
    samples = [walk_sample(rng) for _ in range(3)]
    linear = trajfeat.featurize_samples(samples)
    nearest = trajfeat.featurize_samples(samples, percentile_method="nearest_rank")
    assert not np.array_equal(linear.values, nearest.values)
    # non-percentile columns agree
    for name in ("speed_mean", "speed_min", "speed_max", "speed_std", "distance_mean"):
        np.testing.assert_array_equal(linear.column(name), nearest.column(name))
