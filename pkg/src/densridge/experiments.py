"""Synthetic scenarios, smoothed-ridge oracles and Monte-Carlo validation.

Three families are supported:

* ``circle``: uniform angle on a circle of radius ``radius`` plus isotropic
  Gaussian noise.
* ``box``: uniform on the boundary of a square of side ``side`` (optionally
  with rounded corners) plus isotropic Gaussian noise.
* ``aniso-gaussian``: a centred Gaussian with standard deviations ``axes``.

For the first two, the smoothed density ``p_h = p * K_h`` is the boundary
measure convolved with ``N(0, (noise^2 + h^2) I)``; it is evaluated by an
equal-weight quadrature on the curve, which is itself a Gaussian KDE and
therefore shares all jet machinery.  For the Gaussian family ``p_h`` is
``N(0, diag(axes^2 + h^2))`` in closed form.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import i0e

from .finder import EmptyRidgeError, FinderConfig, find_ridge, scms_trajectories
from .geometry import GeometryError, normal_frame, sigma_matrix
from .inference import BootstrapPlan, ReplicateFailureError, bootstrap, upper_quantile
from .kde import JetBatch, KdeModel, Sample, silverman_bandwidth
from .metrics import as_point_set, hausdorff, nearest, quasi_hausdorff

__all__ = [
    "FAMILIES",
    "Scenario",
    "generate",
    "trial_seed",
    "smoothed_density",
    "GaussianDensity",
    "circle_ridge_radius",
    "oracle_ridge",
    "CoverageReport",
    "run_coverage",
    "Lu2Report",
    "check_lu2",
    "RateReport",
    "rate_check",
]

FAMILIES = ("circle", "box", "aniso-gaussian")
QUAD_SPACING = 0.02  # quadrature spacing as a fraction of the smoothing scale


@dataclass(frozen=True)
class Scenario:
    family: str = "circle"
    n: int = 500
    noise_sigma: float = 0.3
    radius: float = 3.0
    side: float = 1.0
    corner_radius: float = 0.0
    axes: Tuple[float, float] = (3.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if int(self.n) < 2:
            raise ValueError("n must be >= 2")
        if not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be positive")
        if self.family == "circle" and not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.family == "box":
            if not self.side > 0:
                raise ValueError("side must be positive")
            if not 0 <= self.corner_radius <= self.side / 2:
                raise ValueError("corner_radius must lie in [0, side/2]")
        if self.family == "aniso-gaussian":
            if len(self.axes) != 2 or min(self.axes) <= 0:
                raise ValueError("axes must be two positive standard deviations")
        object.__setattr__(self, "axes", tuple(float(a) for a in self.axes))

    @classmethod
    def defaults(cls, family: str, **kw) -> "Scenario":
        base = {"circle": {"noise_sigma": 0.3}, "box": {"noise_sigma": 0.1}}.get(family, {})
        base.update(kw)
        return cls(family=family, **base)

    def to_dict(self):
        out = asdict(self)
        out["axes"] = list(self.axes)
        return out


def trial_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(int(index),))


# --------------------------------------------------------------------------
# curves


def _box_path(side: float, corner: float, t: np.ndarray) -> np.ndarray:
    """Point at arclength fraction ``t`` in [0, 1) along the square boundary."""
    a = side / 2.0
    flat = side - 2.0 * corner
    arc = 0.5 * math.pi * corner
    seg = flat + arc
    s = (np.asarray(t) % 1.0) * 4.0 * seg
    k = np.floor(s / seg).astype(int) % 4
    r = s - k * seg
    out = np.empty((r.shape[0], 2))
    # side k runs counter-clockwise starting on the bottom edge
    on_flat = r < flat
    u = np.where(on_flat, r - flat / 2.0, 0.0)
    ang = np.where(on_flat, 0.0, (r - flat) / max(corner, 1e-300))
    local = np.where(
        on_flat[:, None],
        np.stack([u, np.full_like(u, -a)], axis=1),
        np.stack(
            [flat / 2.0 + corner * np.sin(ang), -(a - corner) - corner * np.cos(ang)], axis=1
        ),
    )
    rot = k * (math.pi / 2.0)
    c, sn = np.cos(rot), np.sin(rot)
    out[:, 0] = c * local[:, 0] - sn * local[:, 1]
    out[:, 1] = sn * local[:, 0] + c * local[:, 1]
    return out


def _curve_length(sc: Scenario) -> float:
    if sc.family == "circle":
        return 2.0 * math.pi * sc.radius
    return 4.0 * (sc.side - 2.0 * sc.corner_radius) + 2.0 * math.pi * sc.corner_radius


def _curve_points(sc: Scenario, t: np.ndarray) -> np.ndarray:
    if sc.family == "circle":
        ang = 2.0 * math.pi * np.asarray(t)
        return sc.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return _box_path(sc.side, sc.corner_radius, t)


def generate(scenario: Scenario, rng=None) -> Sample:
    """Draw ``scenario.n`` points; ``rng`` defaults to one seeded by ``scenario.seed``."""
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    elif not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = int(scenario.n)
    if scenario.family == "aniso-gaussian":
        pts = rng.normal(size=(n, 2)) * np.asarray(scenario.axes)
    else:
        t = rng.uniform(0.0, 1.0, size=n)
        pts = _curve_points(scenario, t) + scenario.noise_sigma * rng.normal(size=(n, 2))
    return Sample(pts)


# --------------------------------------------------------------------------
# smoothed densities


class GaussianDensity:
    """Centred normal density with covariance ``diag(var)`` and its jets."""

    def __init__(self, var: Sequence[float]):
        self.var = np.asarray(var, dtype=float)
        self.d = self.var.shape[0]
        self._norm = 1.0 / math.sqrt((2.0 * math.pi) ** self.d * float(np.prod(self.var)))

    def jets(self, x, order: int = 2) -> JetBatch:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        d = self.d
        a = X / self.var  # Sigma^{-1} x
        p = self._norm * np.exp(-0.5 * np.sum(X * a, axis=1))
        grad = hess = third = None
        P = np.diag(1.0 / self.var)
        if order >= 1:
            grad = -p[:, None] * a
        if order >= 2:
            hess = p[:, None, None] * (a[:, :, None] * a[:, None, :] - P)
        if order >= 3:
            aaa = a[:, :, None, None] * a[:, None, :, None] * a[:, None, None, :]
            lin = (
                a[:, :, None, None] * P[None, None, :, :]
                + a[:, None, :, None] * P[None, :, None, :]
                + a[:, None, None, :] * P[None, :, :, None]
            )
            third = p[:, None, None, None] * (lin - aaa)
        return JetBatch(at=X, value=p, grad=grad, hess=hess, third=third, order=order)

    def density(self, x):
        return self.jets(x, 0).value


def smoothed_scale(scenario: Scenario, h: float) -> float:
    return math.sqrt(scenario.noise_sigma**2 + h**2)


def smoothed_density(scenario: Scenario, h: float):
    """The population smoothed density ``p_h`` with a ``jets`` method."""
    if scenario.family == "aniso-gaussian":
        return GaussianDensity(np.asarray(scenario.axes) ** 2 + h**2)
    s = smoothed_scale(scenario, h)
    q = max(64, int(math.ceil(_curve_length(scenario) / (QUAD_SPACING * s))))
    t = (np.arange(q) + 0.5) / q
    return KdeModel(Sample(_curve_points(scenario, t)), s)


def circle_ridge_radius(radius: float, scale: float) -> float:
    """Radius maximizing the ring density convolved with ``N(0, scale^2 I)``.

    The radial profile is proportional to
    ``exp(-(r^2 + R^2) / (2 s^2)) I0(r R / s^2)``; a grid search brackets
    the maximum, which golden-section search then refines.
    """
    s2 = scale**2

    def neg_log(r):
        z = r * radius / s2
        return -(np.log(i0e(z)) + z - (r * r + radius * radius) / (2.0 * s2))

    grid = np.linspace(0.0, radius, 4001)[1:]
    vals = neg_log(grid)
    k = int(np.argmin(vals))
    if k == 0:
        raise ValueError("smoothing removes the ring: no positive ridge radius")
    if k == grid.size - 1:
        return float(radius)
    res = minimize_scalar(neg_log, bracket=(grid[k - 1], grid[k], grid[k + 1]), method="golden",
                          tol=1e-12)
    return float(res.x)


def oracle_ridge(scenario: Scenario, h: float, resolution: int = 200, extent: Optional[float] = None) -> np.ndarray:
    """Discretized smoothed ridge ``R_h`` with ``resolution`` points.

    ``extent`` bounds the Gaussian family's major-axis segment (default
    twice the major standard deviation).
    """
    if int(resolution) < 3:
        raise ValueError("oracle resolution must be >= 3")
    resolution = int(resolution)
    if scenario.family == "circle":
        r = circle_ridge_radius(scenario.radius, smoothed_scale(scenario, h))
        ang = 2.0 * math.pi * np.arange(resolution) / resolution
        return r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if scenario.family == "aniso-gaussian":
        ext = 2.0 * max(scenario.axes) if extent is None else float(extent)
        t = np.linspace(-ext, ext, resolution)
        major = int(np.argmax(scenario.axes))
        pts = np.zeros((resolution, 2))
        pts[:, major] = t
        return pts
    # box: SCMS on the quadrature density from the boundary curve itself
    model = smoothed_density(scenario, h)
    starts = _curve_points(scenario, np.arange(resolution) / resolution)
    cfg = FinderConfig(mesh=starts, tol_projgrad=1e-10, max_iters=2000, density_floor=0.0)
    X, _, status, _ = scms_trajectories(model, starts, cfg)
    keep = status == "converged"
    if not np.any(keep):
        raise EmptyRidgeError("box oracle did not converge")
    return X[keep]


def _oracle_frames(scenario: Scenario, h: float, pts: np.ndarray):
    dens = smoothed_density(scenario, h)
    jets = dens.jets(pts, 3)
    return jets, [normal_frame(jets[i]) for i in range(len(jets))]


def population_sample(scenario: Scenario, size: int = 1_000_000, seed: int = 12345) -> Sample:
    """A large fixed draw used to approximate population expectations."""
    return generate(replace(scenario, n=int(size)), np.random.default_rng(seed))


# --------------------------------------------------------------------------
# coverage


@dataclass
class CoverageTrial:
    index: int
    h: float
    t_hat: float
    observed: float
    covered: bool
    n_ridge: int
    max_gap: float
    distances: List[float] = field(default_factory=list)
    failed_replicates: int = 0
    error: Optional[str] = None


@dataclass
class CoverageReport:
    scenario: Scenario
    M: int
    alpha: float
    B: int
    seed: int
    statistic: str
    h_rule: Union[str, float]
    resolution: int
    trials: List[CoverageTrial]
    oracle: str

    @property
    def ok_trials(self) -> List[CoverageTrial]:
        return [t for t in self.trials if t.error is None]

    @property
    def empirical_coverage(self) -> float:
        ok = self.ok_trials
        return float(np.mean([t.covered for t in ok])) if ok else float("nan")

    def coverage_at(self, alpha: float) -> float:
        """Coverage recomputed at another level from the stored bootstrap draws."""
        ok = self.ok_trials
        return float(np.mean([t.observed <= upper_quantile(t.distances, alpha) for t in ok]))

    def to_dict(self):
        return {
            "kind": "coverage",
            "scenario": self.scenario.to_dict(),
            "M": self.M,
            "alpha": self.alpha,
            "B": self.B,
            "seed": self.seed,
            "statistic": self.statistic,
            "h_rule": self.h_rule,
            "resolution": self.resolution,
            "oracle": self.oracle,
            "empirical_coverage": self.empirical_coverage,
            "n_failed_trials": len(self.trials) - len(self.ok_trials),
            "trials": [asdict(t) for t in self.trials],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "h", "t_hat", "observed", "covered", "n_ridge", "max_gap", "failed_replicates", "error"])
        for t in self.trials:
            w.writerow([t.index, repr(t.h), repr(t.t_hat), repr(t.observed), int(t.covered),
                        t.n_ridge, repr(t.max_gap), t.failed_replicates, t.error or ""])
        return buf.getvalue()


def _bandwidth(sample: Sample, h_rule) -> float:
    if h_rule == "silverman":
        return silverman_bandwidth(sample)
    return float(h_rule)


def _max_gap(points: np.ndarray) -> float:
    """Largest nearest-neighbour distance within a discrete set."""
    if points.shape[0] < 2:
        return 0.0
    diff = points[:, None, :] - points[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(D, np.inf)
    return float(np.max(np.min(D, axis=1)))


def _coverage_trial(args):
    scenario, i, alpha, plan, h_rule, resolution, statistic = args
    ss = trial_seed(scenario.seed, i)
    data_ss, boot_ss = ss.spawn(2)
    sample = generate(scenario, np.random.default_rng(data_ss))
    h = _bandwidth(sample, h_rule)
    try:
        truth = oracle_ridge(scenario, h, resolution)
        config = plan.finder.with_mesh(truth)
        base = find_ridge(KdeModel(sample, h), config, frames=False)
        boot_seed = int(boot_ss.generate_state(1, np.uint64)[0])
        bplan = BootstrapPlan(B=plan.B, seed=boot_seed, finder=config)
        _, cs = bootstrap(sample, h, base, bplan, alpha=alpha, statistic=statistic)
    except (EmptyRidgeError, ReplicateFailureError, GeometryError, ValueError) as exc:
        return CoverageTrial(i, h, float("nan"), float("nan"), False, 0, float("nan"), error=str(exc))
    dist, _ = nearest(truth, base.locations)
    if statistic == "variance-stabilized":
        observed = float(np.max(dist / KdeModel(sample, h).density(truth)))
    else:
        observed = float(np.max(dist))
    return CoverageTrial(
        index=i,
        h=h,
        t_hat=cs.radius,
        observed=observed,
        covered=bool(observed <= cs.radius),
        n_ridge=len(base),
        max_gap=_max_gap(base.locations),
        distances=[float(v) for v in cs.distances],
        failed_replicates=len(cs.failed),
    )


def run_coverage(
    scenario: Scenario,
    alpha: float,
    M: int,
    plan: BootstrapPlan,
    h_rule: Union[str, float] = "silverman",
    resolution: int = 100,
    statistic: str = "quasi-hausdorff",
    threads: int = 1,
) -> CoverageReport:
    """Monte-Carlo coverage of ``R_h`` by the bootstrap tube.

    Trial ``i`` draws data and bootstrap seeds from ``SeedSequence(scenario.seed,
    spawn_key=(i,))``.  The finder starts from the oracle discretization so
    estimated and oracle ridges are sampled at matching positions; ``plan.finder``
    supplies every other finder setting.  A trial is covered when every oracle
    point lies in the tube.
    """
    if int(M) < 1:
        raise ValueError("M must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    jobs = [(scenario, i, alpha, plan, h_rule, resolution, statistic) for i in range(int(M))]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            trials = list(ex.map(_coverage_trial, jobs))
    else:
        trials = [_coverage_trial(j) for j in jobs]
    oracle = {
        "circle": "closed-form radial profile maximized by golden-section search",
        "aniso-gaussian": "closed-form major-axis segment",
        "box": "SCMS on the curve-quadrature smoothed density",
    }[scenario.family]
    return CoverageReport(
        scenario=scenario,
        M=int(M),
        alpha=float(alpha),
        B=int(plan.B),
        seed=int(plan.seed),
        statistic=statistic,
        h_rule=h_rule,
        resolution=int(resolution),
        trials=trials,
        oracle=oracle,
    )


# --------------------------------------------------------------------------
# local uncertainty checks


@dataclass
class Lu2Report:
    scenario: Scenario
    n: int
    h: float
    M: int
    B: int
    oracle_points: np.ndarray
    trace_sigma: np.ndarray
    mc_scaled_d2: np.ndarray
    cosines: np.ndarray
    tangent_cosines: np.ndarray
    boot_rel_err: Optional[np.ndarray] = None
    boot_rel_err_sample_sigma: Optional[np.ndarray] = None
    boot_vs_mc_rel_err: Optional[np.ndarray] = None

    @property
    def trace_rel_err(self) -> np.ndarray:
        return np.abs(self.mc_scaled_d2 - self.trace_sigma) / self.trace_sigma

    def summary(self) -> Dict[str, float]:
        out = {
            "median_cosine": float(np.median(self.cosines)),
            "median_abs_tangent_cosine": float(np.median(np.abs(self.tangent_cosines))),
            "median_trace_rel_err_mc": float(np.median(self.trace_rel_err)),
        }
        if self.boot_rel_err is not None:
            out["median_trace_rel_err_bootstrap"] = float(np.median(self.boot_rel_err))
            out["median_trace_rel_err_bootstrap_sample_sigma"] = float(np.median(self.boot_rel_err_sample_sigma))
            out["median_boot_vs_mc_rel_err"] = float(np.median(self.boot_vs_mc_rel_err))
        return out

    def to_dict(self):
        return {
            "kind": "lu2",
            "scenario": self.scenario.to_dict(),
            "n": self.n,
            "h": self.h,
            "M": self.M,
            "B": self.B,
            "summary": self.summary(),
            "points": [
                {"x": p.tolist(), "trace_sigma": float(s), "mc_scaled_d2": float(m)}
                for p, s, m in zip(self.oracle_points, self.trace_sigma, self.mc_scaled_d2)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point", "x0", "x1", "trace_sigma", "mc_scaled_d2"])
        for i, (p, s, m) in enumerate(zip(self.oracle_points, self.trace_sigma, self.mc_scaled_d2)):
            w.writerow([i, repr(float(p[0])), repr(float(p[1])), repr(float(s)), repr(float(m))])
        return buf.getvalue()


def _cos(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    return np.sum(a * b, axis=-1) / np.maximum(na * nb, 1e-300)


def check_lu2(
    scenario: Scenario,
    n: int,
    h: float,
    M: int,
    resolution: int = 60,
    B: int = 0,
    finder: Optional[FinderConfig] = None,
    population_size: int = 1_000_000,
) -> Lu2Report:
    """Compare ridge displacement against its linear predictor.

    For ``M`` fresh datasets the displacement ``d(x, R_hat)`` at each oracle
    point ``x`` is compared with ``-W(x) (g_hat(x) - g_h(x))``, and
    ``n h^{d+2} mean_M |d|^2`` with ``Trace(Sigma(x))`` (population
    covariance from a fixed large draw).  With ``B > 0`` each dataset also
    gets a bootstrap estimate of ``rho^2`` at the estimated ridge point
    started from ``x``.
    """
    if scenario.family not in ("circle", "aniso-gaussian"):
        raise ValueError("check_lu2 needs an analytic oracle (circle or aniso-gaussian)")
    truth = oracle_ridge(scenario, h, resolution)
    oj, frames = _oracle_frames(scenario, h, truth)
    W = np.stack([f.W for f in frames])
    tangents = np.stack([f.tangent for f in frames])
    pop = KdeModel(population_sample(scenario, population_size), h)
    trace = np.array([np.trace(sigma_matrix(pop, f)) for f in frames])

    cfg = (finder or FinderConfig()).with_mesh(truth)
    d = truth.shape[1]
    scale = n * h ** (d + 2)
    sq = np.zeros(len(truth))
    cosines, tcos = [], []
    boot_err, boot_err_hat, rho_hat = [], [], []
    for i in range(int(M)):
        ss = trial_seed(scenario.seed, i)
        data_ss, boot_ss = ss.spawn(2)
        sample = generate(replace(scenario, n=int(n)), np.random.default_rng(data_ss))
        model = KdeModel(sample, h)
        base = find_ridge(model, cfg, frames=B > 0)
        dist, idx = nearest(truth, base.locations)
        dvec = base.locations[idx] - truth
        sq += dist**2
        ghat = model.jets(truth, 1).grad
        pred = -np.einsum("mij,mj->mi", W, ghat - oj.grad)
        cosines.append(_cos(dvec, pred))
        tcos.append(_cos(pred, tangents))
        if B > 0:
            seed = int(boot_ss.generate_state(1, np.uint64)[0])
            field_, _ = bootstrap(sample, h, base, BootstrapPlan(B=B, seed=seed, finder=cfg))
            starts = base.start_indices
            tr = trace[starts]
            rho_hat.append((starts, field_.rho2))
            boot_err.append(np.abs(scale * field_.rho2 - tr) / tr)
            tr_hat = np.array([np.trace(sigma_matrix(model, p.frame)) for p in base.points])
            boot_err_hat.append(np.abs(scale * field_.rho2 - tr_hat) / tr_hat)
    mc = scale * sq / M
    report = Lu2Report(
        scenario=scenario,
        n=int(n),
        h=float(h),
        M=int(M),
        B=int(B),
        oracle_points=truth,
        trace_sigma=trace,
        mc_scaled_d2=mc,
        cosines=np.concatenate(cosines),
        tangent_cosines=np.concatenate(tcos),
    )
    if B > 0:
        report.boot_rel_err = np.concatenate(boot_err)
        report.boot_rel_err_sample_sigma = np.concatenate(boot_err_hat)
        mc_rho = sq / M
        report.boot_vs_mc_rel_err = np.concatenate(
            [np.abs(r - mc_rho[s]) / mc_rho[s] for s, r in rho_hat]
        )
    return report


@dataclass
class RateReport:
    scenario: Scenario
    n_small: int
    n_large: int
    h: float
    runs: int
    median_small: np.ndarray
    median_large: np.ndarray

    @property
    def ratio(self) -> float:
        return float(np.mean(self.median_large) / np.mean(self.median_small))

    @property
    def pair_ratios(self) -> np.ndarray:
        return self.median_large / self.median_small

    def to_dict(self):
        return {
            "kind": "rate",
            "scenario": self.scenario.to_dict(),
            "n_small": self.n_small,
            "n_large": self.n_large,
            "h": self.h,
            "runs": self.runs,
            "ratio": self.ratio,
            "theory_ratio": math.sqrt(self.n_small / self.n_large),
            "pair_ratios": self.pair_ratios.tolist(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run", "median_small", "median_large", "ratio"])
        for i, (a, b) in enumerate(zip(self.median_small, self.median_large)):
            w.writerow([i, repr(float(a)), repr(float(b)), repr(float(b / a))])
        return buf.getvalue()


def rate_check(
    scenario: Scenario,
    h: float,
    n_small: int = 2000,
    n_large: int = 8000,
    runs: int = 20,
    resolution: int = 60,
    finder: Optional[FinderConfig] = None,
) -> RateReport:
    """Median ``d(x, R_hat)`` over oracle points at two sample sizes and fixed ``h``.

    ``ratio`` is the ratio of run-averaged medians; first-order theory gives
    ``sqrt(n_small / n_large)``.
    """
    truth = oracle_ridge(scenario, h, resolution)
    cfg = (finder or FinderConfig()).with_mesh(truth)
    med = {n_small: [], n_large: []}
    for i in range(int(runs)):
        for k, n in enumerate((n_small, n_large)):
            rng = np.random.default_rng(trial_seed(scenario.seed, 2 * i + k))
            sample = generate(replace(scenario, n=int(n)), rng)
            base = find_ridge(KdeModel(sample, h), cfg, frames=False)
            dist, _ = nearest(truth, base.locations)
            med[n].append(float(np.median(dist)))
    return RateReport(
        scenario=scenario,
        n_small=int(n_small),
        n_large=int(n_large),
        h=float(h),
        runs=int(runs),
        median_small=np.array(med[n_small]),
        median_large=np.array(med[n_large]),
    )
