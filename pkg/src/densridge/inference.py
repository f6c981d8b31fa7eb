"""Bootstrap local uncertainty and confidence sets for the smoothed ridge.

Each replicate resamples the data with replacement, rebuilds the KDE at the
same bandwidth, and reruns the finder with the same configuration and the
same start mesh as the base estimate.  Replicate ``b`` draws from a
generator seeded by ``SeedSequence(seed, spawn_key=(b,))`` so results do not
depend on execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .finder import EmptyRidgeError, FinderConfig, RidgeSet, find_ridge, resolve_mesh
from .kde import KdeModel, Sample
from .metrics import as_point_set, nearest

__all__ = [
    "BootstrapPlan",
    "UncertaintyField",
    "ConfidenceSet",
    "ReplicateFailureError",
    "replicate_rng",
    "bootstrap_resample",
    "upper_quantile",
    "local_uncertainty",
    "confidence_set",
    "bootstrap",
    "stabilized_statistic",
    "QUANTILE_CONVENTION",
    "MAX_FAILED_FRACTION",
]

QUANTILE_CONVENTION = "order statistic t_(ceil(B(1-alpha)))"
MAX_FAILED_FRACTION = 0.10
STATISTICS = ("quasi-hausdorff", "variance-stabilized")


class ReplicateFailureError(RuntimeError):
    def __init__(self, message: str, failed: List[Tuple[int, str]]):
        super().__init__(message)
        self.failed = failed


@dataclass(frozen=True, eq=False)
class BootstrapPlan:
    B: int
    seed: int = 0
    finder: FinderConfig = field(default_factory=FinderConfig)

    def __post_init__(self):
        if int(self.B) < 1:
            raise ValueError("B must be >= 1")

    def to_dict(self):
        return {"B": int(self.B), "seed": int(self.seed), "finder": self.finder.to_dict()}


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(b),)))


def bootstrap_resample(sample: Sample, rng) -> Sample:
    """``n`` draws with replacement from ``sample``.

    ``rng`` is a generator or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    idx = rng.integers(0, sample.n, size=sample.n)
    return sample.take(idx)


def upper_quantile(values, alpha: float) -> float:
    """The ``ceil(B (1 - alpha))``-th smallest of ``values``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    t = np.sort(np.asarray(values, dtype=float))
    if t.size == 0:
        raise ValueError("no bootstrap statistics")
    k = math.ceil(t.size * (1.0 - alpha) - 1e-9)
    k = min(max(k, 1), t.size)
    return float(t[k - 1])


@dataclass(frozen=True, eq=False)
class UncertaintyField:
    base: RidgeSet
    rho2: np.ndarray
    plan: BootstrapPlan
    h: float
    failed: List[Tuple[int, str]] = field(default_factory=list)
    per_replicate: Optional[np.ndarray] = None

    @property
    def n_ok(self) -> int:
        return self.plan.B - len(self.failed)


@dataclass(frozen=True, eq=False)
class ConfidenceSet:
    base: RidgeSet
    radius: float
    alpha: float
    distances: np.ndarray
    statistic_kind: str
    plan: BootstrapPlan
    h: float
    failed: List[Tuple[int, str]] = field(default_factory=list)
    base_density: Optional[np.ndarray] = None
    sample: Optional[Sample] = None
    quantile_convention: str = QUANTILE_CONVENTION

    def tube_radii(self) -> np.ndarray:
        """Tube radius at each base ridge point."""
        if self.statistic_kind == "variance-stabilized":
            return self.radius * self.base_density
        return np.full(len(self.base), self.radius)

    def contains(self, points) -> np.ndarray:
        """Whether each query point lies in the tube around the base ridge."""
        P = as_point_set(points)
        dist, _ = nearest(P, self.base.locations)
        if self.statistic_kind == "variance-stabilized":
            model = KdeModel(self.sample, self.h)
            return dist <= self.radius * model.density(P)
        return dist <= self.radius


def stabilized_statistic(base, other, model_for_density: KdeModel, floor: float = 0.0) -> float:
    """``max_{x in base} d(x, other) / p(x)`` with ``p`` from ``model_for_density``."""
    X = as_point_set(base)
    dist, _ = nearest(X, as_point_set(other))
    p = model_for_density.density(X)
    if np.any(p <= floor) or np.any(p <= 0):
        raise ValueError("density at or below the floor on the base set; the ratio is unbounded")
    return float(np.max(dist / p))


def _replicate(args):
    sample, h, config, seed, b, base_locs, base_density, want_rho, stat = args
    rng = replicate_rng(seed, b)
    boot = bootstrap_resample(sample, rng)
    try:
        ridge = find_ridge(KdeModel(boot, h), config, frames=False)
    except EmptyRidgeError as exc:
        return b, None, None, str(exc)
    dist, _ = nearest(base_locs, ridge.locations)
    rho = dist**2 if want_rho else None
    if stat == "variance-stabilized":
        t = float(np.max(dist / base_density))
    else:
        t = float(np.max(dist))
    return b, rho, t, None


def _run_chunk(jobs):
    return [_replicate(j) for j in jobs]


def bootstrap(
    sample: Sample,
    h: float,
    base: RidgeSet,
    plan: BootstrapPlan,
    alpha: Optional[float] = None,
    statistic: str = "quasi-hausdorff",
    keep_replicates: bool = False,
    threads: int = 1,
):
    """One bootstrap pass producing the uncertainty field and, if ``alpha``
    is given, the confidence set.  Returns ``(UncertaintyField, ConfidenceSet | None)``.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"statistic must be one of {STATISTICS}")
    if alpha is not None and not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    # pin the mesh so every replicate starts from the same points
    config = plan.finder.with_mesh(resolve_mesh(plan.finder, sample))
    base_locs = base.locations
    model = KdeModel(sample, h)
    base_density = model.density(base_locs)
    if statistic == "variance-stabilized" and np.any(base_density <= 0):
        raise ValueError("zero density on the base ridge; stabilized statistic undefined")
    jobs = [
        (sample, h, config, plan.seed, b, base_locs, base_density, True, statistic)
        for b in range(int(plan.B))
    ]
    if threads > 1 and len(jobs) > 1:
        chunks = [jobs[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = [r for part in ex.map(_run_chunk, chunks) for r in part]
        results.sort(key=lambda r: r[0])
    else:
        results = _run_chunk(jobs)

    failed = [(b, msg) for b, _, _, msg in results if msg is not None]
    if len(failed) > MAX_FAILED_FRACTION * plan.B:
        raise ReplicateFailureError(
            f"{len(failed)} of {plan.B} bootstrap replicates produced an empty ridge", failed
        )
    good = [r for r in results if r[3] is None]
    per = np.stack([r[1] for r in good])
    field_ = UncertaintyField(
        base=base,
        rho2=per.mean(axis=0),
        plan=plan,
        h=h,
        failed=failed,
        per_replicate=per if keep_replicates else None,
    )
    cset = None
    if alpha is not None:
        t = np.array([r[2] for r in good])
        cset = ConfidenceSet(
            base=base,
            radius=upper_quantile(t, alpha),
            alpha=alpha,
            distances=t,
            statistic_kind=statistic,
            plan=plan,
            h=h,
            failed=failed,
            base_density=base_density,
            sample=sample,
        )
    return field_, cset


def local_uncertainty(sample, h, base, plan, keep_replicates=False, threads=1) -> UncertaintyField:
    """Bootstrap mean of ``d^2(x, R*_b)`` at each base ridge point."""
    return bootstrap(sample, h, base, plan, keep_replicates=keep_replicates, threads=threads)[0]


def confidence_set(sample, h, base, plan, alpha, statistic="quasi-hausdorff", threads=1) -> ConfidenceSet:
    """Tube radius from ``t_b = dist_Pi(R*_b, R_hat) = max_{x in R_hat} d(x, R*_b)``."""
    return bootstrap(sample, h, base, plan, alpha=alpha, statistic=statistic, threads=threads)[1]
