import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocloud.cloud import PointCloud
from geocloud.errors import EmptyRequest, InsufficientPoints, RatioError
from geocloud.sampling import (SampleSet, covering_radius, extract_samples, fps, fps_indices,
                               split_dataset)
from geocloud.shapes import generate_sphere


def brute_force_maxmin(points, start, s):
    """Enumerate every candidate at each step and keep the one farthest from the chosen set."""
    chosen = [start]
    while len(chosen) < s:
        best, best_val = None, -1.0
        for i in range(len(points)):
            if i in chosen:
                continue
            val = min(abs(points[i] - points[c]) for c in chosen)
            if val > best_val:
                best, best_val = i, val
        chosen.append(best)
    return chosen


def test_fps_1d_example():
    line = np.arange(11.0)
    idx = fps_indices(line, 3, start=0)
    assert list(line[idx]) == [0, 10, 5]
    assert list(idx) == brute_force_maxmin(list(line), 0, 3)


def test_fps_full_is_permutation(rng):
    pts = rng.normal(size=(40, 3))
    out = fps(pts, 40, seed=3).points
    assert sorted(map(tuple, out)) == sorted(map(tuple, pts))


def test_fps_errors(rng):
    pts = rng.normal(size=(5, 3))
    with pytest.raises(InsufficientPoints):
        fps(pts, 6)
    with pytest.raises(EmptyRequest):
        fps(pts, 0)


def test_fps_deterministic_and_subset(rng):
    pts = rng.normal(size=(300, 3))
    a = fps(pts, 50, seed=11).points
    np.testing.assert_array_equal(a, fps(pts, 50, seed=11).points)
    members = set(map(tuple, pts))
    assert all(tuple(p) in members for p in a)


def test_second_point_is_farthest(rng):
    pts = rng.normal(size=(200, 3))
    idx = fps_indices(pts, 2, seed=5)
    d = np.linalg.norm(pts - pts[idx[0]], axis=1)
    assert d[idx[1]] == d.max()


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_covering_radius_non_increasing(seed):
    pts = np.random.default_rng(seed).normal(size=(120, 2))
    idx = fps_indices(pts, 25, seed=seed)
    radii = [covering_radius(pts, pts[idx[:k]]) for k in range(1, 26)]
    assert all(b <= a for a, b in zip(radii, radii[1:]))


@pytest.mark.slow
def test_extract_samples_paper_scale():
    cloud = generate_sphere(10_000, seed=0)
    ss = extract_samples(cloud, 960, 512, label="First", seed=7)
    assert len(ss) == 960 and all(s.n == 512 for s in ss.samples)
    assert ss.seeds[:3] == [7, 8, 9]
    members = set(map(tuple, cloud.points))
    for s in ss.samples[::97]:
        assert all(tuple(p) in members for p in s.points)
        assert s.label == "First"


def test_extract_single_matches_fps():
    cloud = generate_sphere(2000, seed=1)
    ss = extract_samples(cloud, 1, 64, seed=42)
    np.testing.assert_array_equal(ss.samples[0].points, fps(cloud, 64, seed=42).points)


def test_extract_batches_match_sequential():
    cloud = generate_sphere(1500, seed=2)
    ss = extract_samples(cloud, 130, 32, seed=100)
    for i in (0, 63, 64, 129):
        np.testing.assert_array_equal(ss.samples[i].points, fps(cloud, 32, seed=100 + i).points)


def _dummy_set(label, n):
    return SampleSet([PointCloud([[i, 0.0, 0.0]], label=label) for i in range(n)], label)


def test_split_paper_sizes():
    split = split_dataset(_dummy_set("First", 960), _dummy_set("Second", 960), seed=1)
    assert split.sizes() == (1344, 288, 288)
    for part in ("train", "validation", "test"):
        labels = [lab for _, lab in getattr(split, part)]
        assert labels.count("First") == labels.count("Second")
    assert sum(lab == "First" for _, lab in split.test) == 144


def test_split_is_partition():
    a, b = _dummy_set("First", 101), _dummy_set("Second", 101)
    split = split_dataset(a, b, seed=3)
    seen = [id(s) for part in (split.train, split.validation, split.test) for s, _ in part]
    assert len(seen) == len(set(seen)) == 202


def test_split_all_train():
    split = split_dataset(_dummy_set("First", 10), _dummy_set("Second", 10), (1, 0, 0), seed=0)
    assert split.sizes() == (20, 0, 0)


def test_split_ratio_error():
    with pytest.raises(RatioError):
        split_dataset(_dummy_set("First", 4), _dummy_set("Second", 4), (0.5, 0.3, 0.3))


def test_by_label_same_positions():
    a, b = _dummy_set("First", 50), _dummy_set("Second", 50)
    split = split_dataset(a, b, seed=9)
    fa = [s.points[0, 0] for s in split.by_label("test", "First")]
    fb = [s.points[0, 0] for s in split.by_label("test", "Second")]
    assert fa == fb == sorted(fa)
