import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advurl.clusterer import elbow_scan, kmeans, lloyd, project_2d, write_curve_csv, write_projection_csv
from advurl.errors import TooFewPoints


def two_blobs(n=100, d=6, seed=0, gap=10.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n, d)), rng.normal(gap, 1, (n, d))])
    return X, np.repeat([0, 1], n)


def test_two_points():
    r = kmeans([[0.0, 0.0], [5.0, 5.0]], 2)
    assert r.distortion == 0.0 and sorted(r.assignments.tolist()) == [0, 1]


def test_k1_is_mean():
    X = np.random.default_rng(1).normal(size=(50, 3))
    r = kmeans(X, 1)
    assert np.allclose(r.centroids[0], X.mean(0))
    assert r.distortion == pytest.approx(((X - X.mean(0)) ** 2).sum())


def test_blob_recovery():
    X, y = two_blobs()
    a = kmeans(X, 2, seed=3).assignments
    agree = max((a == y).mean(), (a != y).mean())
    assert agree >= 0.99


def test_assignments_are_nearest_and_pure():
    X, _ = two_blobs(40, 3, 2, gap=2.0)
    r = kmeans(X, 4, seed=5)
    d = ((X[:, None, :] - r.centroids[None]) ** 2).sum(-1)
    assert np.array_equal(r.assignments, d.argmin(1))
    assert r.distortion >= 0
    again = kmeans(X, 4, seed=5)
    assert np.array_equal(again.centroids, r.centroids) and again.distortion == r.distortion


def test_lloyd_trace_non_increasing():
    X, _ = two_blobs(60, 2, 4, gap=1.0)
    rng = np.random.default_rng(0)
    _, _, _, _, trace = lloyd(X, X[rng.choice(len(X), 5, replace=False)])
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


def test_relabeling_keeps_partition():
    X, _ = two_blobs(30, 2, 6, gap=3.0)
    r = kmeans(X, 3, seed=1)
    for perm in itertools.permutations(range(3)):
        C = r.centroids[list(perm)]
        _, a, dist, _, _ = lloyd(X, C, max_iter=0)
        same = {frozenset(np.flatnonzero(a == j)) for j in range(3)}
        assert same == {frozenset(np.flatnonzero(r.assignments == j)) for j in range(3)}
        assert dist == pytest.approx(r.distortion)


def test_elbow_two_blobs():
    X, _ = two_blobs()
    curve, k, results = elbow_scan(X, range(1, 10), seed=0, restarts=5)
    assert len(curve) == 9 and k == 2
    assert [r.k for r in results] == list(range(1, 10))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=10, deadline=None)
def test_elbow_curve_non_increasing(seed):
    X = np.random.default_rng(seed).normal(size=(40, 3))
    curve, _, _ = elbow_scan(X, range(1, 10), seed=seed, restarts=5)
    D = [v for _, v in curve]
    assert all(b <= a for a, b in zip(D, D[1:]))


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        kmeans([[0.0]], 2)
    with pytest.raises(TooFewPoints):
        project_2d([[1.0, 2.0]])


def test_projection_of_2d_is_rotation():
    X = np.random.default_rng(2).normal(size=(30, 2)) @ np.array([[3.0, 1.0], [0.0, 0.5]])
    P = project_2d(X)
    dx = np.linalg.norm(X[:, None] - X[None], axis=-1)
    dp = np.linalg.norm(P[:, None] - P[None], axis=-1)
    assert np.abs(dx - dp).max() <= 1e-9


def test_projection_rank_one_and_ordering():
    t = np.random.default_rng(3).normal(size=40)
    P = project_2d(np.outer(t, [1.0, 2.0, -1.0, 0.5]))
    assert np.abs(P[:, 1]).max() <= 1e-9
    Q = project_2d(np.random.default_rng(4).normal(size=(200, 6)) * [5, 1, 3, 1, 1, 2])
    assert Q[:, 0].var() >= Q[:, 1].var()


def test_writers(tmp_path):
    write_curve_csv(tmp_path / "c.csv", [(1, 10.0), (2, 3.5)])
    write_projection_csv(tmp_path / "p.csv", np.array([[0.5, -1.0]]), [1], [0])
    assert (tmp_path / "c.csv").read_text().splitlines() == ["k,distortion", "1,10.0", "2,3.5"]
    assert (tmp_path / "p.csv").read_text().splitlines()[1] == "0.5,-1.0,1,0"
