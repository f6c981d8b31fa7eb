import numpy as np
import pytest

from densridge.experiments import (
    GaussianDensity,
    Scenario,
    circle_ridge_radius,
    generate,
    oracle_ridge,
    smoothed_density,
    smoothed_scale,
)
from densridge.finder import (
    EmptyRidgeError,
    FinderConfig,
    FinderError,
    GridSpec,
    find_ridge,
    resolve_mesh,
    scms_step,
    scms_trajectories,
)
from densridge.geometry import eigen_frame, is_ridge_point
from densridge.kde import KdeModel, Sample
from densridge.metrics import hausdorff


class _Analytic:
    """Adapter giving the closed-form Gaussian the argument shape scms_step uses."""

    def __init__(self, var, h=1.0):
        self.g = GaussianDensity(var)
        self.h = h

    def jets(self, x, order=2):
        return self.g.jets(x, order)


def test_grid_points_row_major():
    pts = GridSpec((0.0, 0.0), (1.0, 1.0), 2).points()
    assert np.array_equal(pts, [[0, 0], [0, 1], [1, 0], [1, 1]])


def test_resolve_mesh_modes(circle_sample):
    assert np.array_equal(resolve_mesh(FinderConfig(), circle_sample), circle_sample.points)
    explicit = np.array([[0.5, 0.5], [1.0, -2.0]])
    assert np.array_equal(resolve_mesh(FinderConfig(mesh=explicit), circle_sample), explicit)
    with pytest.raises(FinderError):
        resolve_mesh(FinderConfig(mesh=np.zeros((2, 3))), circle_sample)


def test_config_validation():
    for bad in ({"tol_projgrad": 0}, {"max_iters": 0}, {"density_floor": 1.0}, {"step_rule": "newton"},
                {"mesh": "everywhere"}):
        with pytest.raises(ValueError):
            FinderConfig(**bad)


def test_fixed_point_on_analytic_ridge():
    model = _Analytic([9.0, 1.0])
    x = np.array([2.5, 0.0])
    assert np.array_equal(scms_step(model, x), x)
    assert np.array_equal(scms_step(model, x, "fixed", 0.3), x)


def test_step_is_orthogonal_to_v1(circle_model):
    rng = np.random.default_rng(0)
    for x in rng.uniform(-3, 3, size=(20, 2)):
        v1 = eigen_frame(circle_model.jet(x, 2)).v1
        step = scms_step(circle_model, x) - x
        assert abs(step @ v1) <= 1e-12 * max(np.linalg.norm(step), 1e-300)


def test_vacuum_start_raises():
    model = KdeModel(Sample([[0.0, 0.0]]), 0.1)
    with pytest.raises(FinderError, match="vacuum"):
        scms_step(model, np.array([100.0, 0.0]))


def test_circle_radial_convergence():
    sc = Scenario.defaults("circle", noise_sigma=0.3)
    h = 0.5
    dens = smoothed_density(sc, h)
    r_star = circle_ridge_radius(sc.radius, smoothed_scale(sc, h))
    # far outside the ring the radial direction has the larger curvature and
    # the start is itself a (low-density) ridge point, so start nearer the ring
    x = np.array([3.3, 0.3])
    gaps = []
    for _ in range(30):
        x = scms_step(dens, x)
        gaps.append(abs(np.linalg.norm(x) - r_star))
    gaps = np.array(gaps[1:])
    settled = gaps > 1e-7
    assert np.all(np.diff(gaps)[settled[:-1]] <= 1e-12)
    assert gaps[-1] < 1e-7


def test_ridge_start_returned_unchanged():
    model = _Analytic([9.0, 1.0])
    starts = np.array([[1.0, 0.0], [-3.0, 0.0]])
    X, iters, status, _ = scms_trajectories(model, starts, FinderConfig(mesh=starts))
    assert np.array_equal(X, starts)
    assert list(iters) == [0, 0]
    assert list(status) == ["converged", "converged"]


def test_post_filter_soundness(circle_model):
    cfg = FinderConfig(mesh=GridSpec((-4, -4), (4, 4), 15))
    ridge = find_ridge(circle_model, cfg)
    jets = circle_model.jets(ridge.locations, 2)
    vmax = ridge.values.max()
    for i, p in enumerate(ridge):
        assert is_ridge_point(jets[i], cfg.tol_projgrad, cfg.grad_floor * jets.value[i] / circle_model.h)
        assert p.lambda2 < 0
        assert p.value >= cfg.density_floor * vmax


def test_determinism(circle_model):
    cfg = FinderConfig(mesh=GridSpec((-4, -4), (4, 4), 9))
    a = find_ridge(circle_model, cfg)
    b = find_ridge(circle_model, cfg)
    assert np.array_equal(a.locations, b.locations)
    assert [p.iterations for p in a] == [p.iterations for p in b]


def test_density_nondecreasing_along_trajectories(circle_model):
    starts = GridSpec((-4, -4), (4, 4), 7).points()
    _, _, status, hist = scms_trajectories(circle_model, starts, FinderConfig(mesh=starts), record=True)
    for h, s in zip(hist, status):
        if s == "converged":
            assert np.all(np.diff(h) >= -1e-12)


def test_circle_closed_loop(circle_model):
    ridge = find_ridge(circle_model, FinderConfig())
    L = ridge.locations
    r = np.linalg.norm(L, axis=1)
    on_loop = L[np.abs(r - np.median(r)) < 0.3]
    assert len(on_loop) > 0.9 * len(L)
    # every angular sector holds points, so the loop is closed
    ang = np.arctan2(on_loop[:, 1], on_loop[:, 0])
    counts = np.histogram(ang, bins=36, range=(-np.pi, np.pi))[0]
    assert counts.min() > 0
    D = np.linalg.norm(on_loop[:, None] - on_loop[None], axis=-1)
    np.fill_diagonal(D, np.inf)
    nn = D.min(axis=1)
    assert nn.max() < 0.25 * np.median(r)


def test_resolution_self_consistency(circle_model):
    coarse = GridSpec((-4, -4), (4, 4), 9)
    fine = GridSpec((-4, -4), (4, 4), 17)
    spacing = 8 / 8
    a = find_ridge(circle_model, FinderConfig(mesh=coarse), frames=False)
    b = find_ridge(circle_model, FinderConfig(mesh=fine), frames=False)
    assert hausdorff(a, b) < spacing


def test_aniso_points_near_major_axis_center():
    sc = Scenario.defaults("aniso-gaussian", n=2000)
    s = generate(sc)
    model = KdeModel(s, 0.56)
    ridge = find_ridge(model, FinderConfig(mesh=oracle_ridge(sc, 0.56, 31, extent=2.0)), frames=False)
    assert np.max(np.abs(ridge.locations[:, 1])) < 0.25


def test_empty_ridge():
    model = KdeModel(Sample([[0.0, 0.0], [1.0, 0.0]]), 0.2)
    with pytest.raises(EmptyRidgeError) as e:
        find_ridge(model, FinderConfig(mesh=np.array([[50.0, 50.0]])))
    assert e.value.diagnostics == ["vacuum"]


def test_density_floor_zero_keeps_more(circle_model):
    cfg = FinderConfig(mesh=GridSpec((-6, -6), (6, 6), 13))
    a = find_ridge(circle_model, cfg, frames=False)
    b = find_ridge(circle_model, FinderConfig(mesh=cfg.mesh, density_floor=0.0), frames=False)
    assert len(b) >= len(a)


def test_merge_radius():
    sc = Scenario.defaults("circle")
    s = generate(sc)
    model = KdeModel(s, 0.75)
    a = find_ridge(model, FinderConfig(), frames=False)
    b = find_ridge(model, FinderConfig(merge_radius=0.5), frames=False)
    assert len(b) < len(a)
    assert hausdorff(a, b) <= 0.5 + 1e-12
