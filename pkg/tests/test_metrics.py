import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densridge.metrics import hausdorff, nearest, project, quasi_hausdorff


def brute_qh(A, B):
    # sup over B of the distance to A, as plain Python loops
    worst = 0.0
    for b in B:
        best = math.inf
        for a in A:
            dd = 0.0
            for k in range(len(a)):
                dd += (float(b[k]) - float(a[k])) ** 2
            best = min(best, dd)
        worst = max(worst, math.sqrt(best))
    return worst


point_sets = st.integers(1, 30).flatmap(
    lambda k: st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=k, max_size=k)
)


def test_project_examples():
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    vec, dist, idx = project([2.0, 0.0], A)
    assert np.array_equal(vec, [-1.0, 0.0]) and dist == 1.0 and idx == 0
    vec, dist, idx = project([0.0, 1.0], A)
    assert np.array_equal(vec, [0.0, 0.0]) and dist == 0.0 and idx == 1


def test_nearest_matches_exhaustive():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(50, 3))
    X = rng.normal(size=(20, 3))
    dist, idx = nearest(X, A)
    for i, x in enumerate(X):
        full = np.sqrt(((A - x) ** 2).sum(axis=1))
        assert idx[i] == np.argmin(full)
        assert dist[i] == pytest.approx(full.min(), rel=1e-15)


def test_ties_go_to_lowest_index():
    A = np.array([[1.0, 0.0], [-1.0, 0.0]])
    assert nearest([[0.0, 0.0]], A)[1][0] == 0


def test_kdtree_backend_agrees():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(300, 2))
    B = rng.normal(size=(200, 2))
    assert quasi_hausdorff(A, B, "kdtree") == pytest.approx(quasi_hausdorff(A, B), rel=1e-12)
    with pytest.raises(ValueError):
        nearest(B, A, "octree")


def test_quasi_hausdorff_asymmetry():
    A = np.array([[0.0, 0.0], [1.0, 0.0]])
    B = np.vstack([A, [[1.0, 7.0]]])
    assert quasi_hausdorff(A, A) == 0.0
    assert quasi_hausdorff(A, B) == 7.0
    assert quasi_hausdorff(B, A) == 0.0
    assert hausdorff(A, B) == 7.0


def test_square_corners_vs_center():
    corners = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    assert hausdorff(corners, [[0.5, 0.5]]) == pytest.approx(math.sqrt(2) / 2, rel=1e-15)


def test_empty_and_nonfinite_rejected():
    with pytest.raises(ValueError):
        hausdorff(np.empty((0, 2)), [[0.0, 0.0]])
    with pytest.raises(ValueError):
        hausdorff([[np.nan, 0.0]], [[0.0, 0.0]])


@settings(max_examples=50, deadline=None)
@given(point_sets, point_sets)
def test_brute_force_equivalence(A, B):
    A, B = np.array(A), np.array(B)
    assert quasi_hausdorff(A, B) == brute_qh(A, B)
    assert quasi_hausdorff(B, A) == brute_qh(B, A)
    assert hausdorff(A, B) == max(brute_qh(A, B), brute_qh(B, A))


@settings(max_examples=100, deadline=None)
@given(point_sets, point_sets, point_sets)
def test_triangle_and_symmetry(A, B, C):
    assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12
    assert hausdorff(A, B) == hausdorff(B, A)


@settings(max_examples=50, deadline=None)
@given(point_sets, point_sets, st.floats(0, 2 * math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_isometry_invariance(A, B, theta, a, b):
    A, B = np.array(A), np.array(B)
    Q = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    t = np.array([a, b])
    A2, B2 = A @ Q.T + t, B @ Q.T + t
    assert quasi_hausdorff(A2, B2) == pytest.approx(quasi_hausdorff(A, B), abs=1e-10)
    assert hausdorff(A2, B2) == pytest.approx(hausdorff(A, B), abs=1e-10)


def test_quasi_distances_agree_for_close_curves(circle_model):
    from densridge.experiments import Scenario, oracle_ridge
    from densridge.finder import FinderConfig, find_ridge

    sc = Scenario.defaults("circle")
    truth = oracle_ridge(sc, circle_model.h, 400)
    est = find_ridge(circle_model, FinderConfig(mesh=oracle_ridge(sc, circle_model.h, 400)), frames=False)
    spacing = 2 * math.pi * np.linalg.norm(truth[0]) / 400
    assert abs(quasi_hausdorff(truth, est) - quasi_hausdorff(est, truth)) <= 2 * spacing
