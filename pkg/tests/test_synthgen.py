"""Deterministic trajectory generator, corruption and the point-log emitter."""

import numpy as np
import pytest

from trajmode import denoise, ingest, pointfeat, synthgen, trajfeat
from trajmode.synthgen import ModeProfile, corrupt, generate


def test_generate_is_deterministic(tmp_path):
    a = generate(seed=21)
    b = generate(seed=21)
    assert a == b
    pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    ingest.write_samples(a, pa)
    ingest.write_samples(b, pb)
    assert pa.read_bytes() == pb.read_bytes()
    c = generate(seed=22)
    assert c != a


def test_generate_counts_and_structure():
    profiles = (
        ModeProfile("walk", 1.4, 0.3, 25.0, points_per_sample=20, samples=3),
        ModeProfile("bus", 8.0, 3.0, 6.0, points_per_sample=30, samples=2),
    )
    samples = generate(profiles, seed=1)
    assert [s.mode for s in samples] == ["walk"] * 3 + ["bus"] * 2
    assert [len(s.points) for s in samples] == [20, 20, 20, 30, 30]
    days = set()
    for s in samples:
        s.validate()
        days.add(s.day)
        assert abs(s.points[0].latitude - 39.9) < 0.06
        assert abs(s.points[0].longitude - 116.4) < 0.06
        deltas = {
            (b.timestamp - a.timestamp).total_seconds()
            for a, b in zip(s.points, s.points[1:])
        }
        assert deltas == {1.0}
    assert len(days) == len(samples)  # one calendar day per sample


def test_generated_samples_pass_the_feature_pipeline():
    samples = generate(
        (ModeProfile("car", 15.0, 5.0, 4.0, points_per_sample=12, samples=4),), seed=2
    )
    matrix = trajfeat.featurize_samples(samples)
    trajfeat.assert_finite_matrix(matrix)
    assert len(matrix) == 4


def test_walk_speed_mean_in_expected_band():
    samples = generate(
        (ModeProfile("walk", 1.4, 0.3, 25.0, points_per_sample=60, samples=10),), seed=5
    )
    for s in samples:
        feats = pointfeat.compute_point_features(s)
        assert 0.5 <= float(feats.speed.mean()) <= 2.5


def test_zero_heading_volatility_walks_a_straight_line():
    samples = generate(
        (ModeProfile("bike", 4.0, 1.0, 0.0, points_per_sample=30, samples=3),), seed=8
    )
    for s in samples:
        feats = pointfeat.compute_point_features(s)
        # Steps follow one compass heading in each point's local tangent frame,
        # so recomputed great-circle bearings wobble at the 1e-5 degree level.
        assert np.ptp(feats.bearing) < 1e-4
        assert np.max(np.abs(feats.bearing_rate)) < 1e-4


def test_profile_validation():
    with pytest.raises(ValueError):
        ModeProfile("hovercraft", 1.0, 0.1, 5.0, points_per_sample=20, samples=1)
    with pytest.raises(ValueError):
        ModeProfile("walk", 0.0, 0.1, 5.0, points_per_sample=20, samples=1)
    with pytest.raises(ValueError):
        ModeProfile("walk", 1.0, -0.1, 5.0, points_per_sample=20, samples=1)
    with pytest.raises(ValueError):
        ModeProfile("walk", 1.0, 0.1, -5.0, points_per_sample=20, samples=1)
    with pytest.raises(ValueError):
        ModeProfile("walk", 1.0, 0.1, 5.0, points_per_sample=9, samples=1)
    with pytest.raises(ValueError):
        ModeProfile("walk", 1.0, 0.1, 5.0, points_per_sample=20, samples=0)


def test_profiles_from_dicts():
    records = [
        {"mode": "walk", "speed_mean": 1.4, "speed_sd": 0.3, "heading_volatility": 25.0},
        {
            "mode": "car",
            "speed_mean": 15.0,
            "speed_sd": 5.0,
            "heading_volatility": 4.0,
            "points_per_sample": 30,
            "samples": 10,
        },
    ]
    profiles = synthgen.profiles_from_dicts(records)
    assert profiles[0].mode == "walk"
    assert profiles[1].points_per_sample == 30
    with pytest.raises(ValueError):
        synthgen.profiles_from_dicts([{**records[0], "turbo": True}])
    with pytest.raises(TypeError):
        synthgen.profiles_from_dicts([{"mode": "walk"}])


def test_default_profiles_are_the_benchmark_quartet():
    by_mode = {p.mode: p for p in synthgen.DEFAULT_PROFILES}
    assert set(by_mode) == {"walk", "bike", "bus", "car"}
    assert by_mode["walk"].speed_mean == 1.4
    assert by_mode["bike"].speed_mean == 4.0
    assert by_mode["bus"].speed_mean == 8.0
    assert by_mode["car"].speed_mean == 15.0
    assert all(p.points_per_sample == 60 for p in by_mode.values())
    assert all(p.samples == 200 for p in by_mode.values())


def test_corrupt_fraction_zero_is_identity(default_samples):
    out, refs = corrupt(default_samples, 0.0, seed=1)
    assert refs == []
    assert out == list(default_samples)


def test_corrupt_fraction_one_touches_every_sample():
    samples = generate(
        (ModeProfile("walk", 1.4, 0.3, 25.0, points_per_sample=20, samples=6),), seed=4
    )
    out, refs = corrupt(samples, 1.0, seed=1)
    assert len(refs) == 6
    assert [s.mode for s in out] == [s.mode for s in samples]
    assert [s.day for s in out] == [s.day for s in samples]
    for before, after in zip(samples, out):
        assert [p.timestamp for p in before.points] == [p.timestamp for p in after.points]
        moved = sum(
            1
            for a, b in zip(before.points, after.points)
            if (a.latitude, a.longitude) != (b.latitude, b.longitude)
        )
        assert moved == round(0.2 * len(before.points))
        after.validate()


def test_corrupt_is_deterministic(default_samples):
    a, ra = corrupt(default_samples, 0.1, seed=6)
    b, rb = corrupt(default_samples, 0.1, seed=6)
    assert a == b and ra == rb
    c, rc = corrupt(default_samples, 0.1, seed=7)
    assert rc != ra or c != a


def test_corrupt_fraction_validation(default_samples):
    with pytest.raises(ValueError):
        corrupt(default_samples, -0.01, seed=1)
    with pytest.raises(ValueError):
        corrupt(default_samples, 1.01, seed=1)


def test_corrupted_rows_land_beyond_three_indicator_units(corrupted_tenth, corrupted_matrix):
    _, refs = corrupted_tenth
    ref_set = set(refs)
    speeds = corrupted_matrix.column("speed_mean")
    med = float(np.median(speeds))
    m = float(np.median(np.abs(speeds - med)))
    corrupted_rows = [i for i, r in enumerate(corrupted_matrix.refs) if r in ref_set]
    assert m > 0.0
    for i in corrupted_rows:
        assert abs(speeds[i] - med) / m > 3.0


def test_mask_recall_on_corrupted_rows(corrupted_tenth, corrupted_matrix):
    _, refs = corrupted_tenth
    mask = denoise.noise_mask_for(corrupted_matrix)
    _, removed = denoise.apply_mask(corrupted_matrix, mask)
    recall = len(set(removed) & set(refs)) / len(refs)
    assert recall >= 0.8


def test_emitted_tree_reingests_losslessly(tmp_path):
    profiles = (
        ModeProfile("walk", 1.4, 0.3, 25.0, points_per_sample=12, samples=3),
        ModeProfile("taxi", 12.0, 4.0, 5.0, points_per_sample=15, samples=2),
    )
    samples = generate(profiles, seed=17)
    data_dir = synthgen.write_geolife_tree(samples, tmp_path)
    assert data_dir == tmp_path / "Data"

    plt_files = sorted(data_dir.glob("*/Trajectory/*.plt"))
    assert len(plt_files) == 5
    header = plt_files[0].read_text().splitlines()[:6]
    assert header[0] == "Geolife trajectory"
    assert len(header) == 6

    back = ingest.load_geolife(tmp_path, min_points=10)
    assert sorted(back, key=lambda s: (s.user_id, s.day)) == sorted(
        samples, key=lambda s: (s.user_id, s.day)
    )


def test_emitted_tree_counts_survive_filtering(tmp_path):
    samples = generate(
        (ModeProfile("bus", 8.0, 3.0, 6.0, points_per_sample=11, samples=4),), seed=19
    )
    synthgen.write_geolife_tree(samples, tmp_path)
    assert ingest.load_geolife(tmp_path, min_points=12) == []
