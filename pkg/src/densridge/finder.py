"""Subspace-constrained mean shift (SCMS) ridge finder."""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import GeometryError, NormalFrame, eigh_desc, normal_frame, normal_residual
from .kde import KdeModel, Sample

__all__ = [
    "GridSpec",
    "FinderConfig",
    "RidgePoint",
    "RidgeSet",
    "FinderError",
    "EmptyRidgeError",
    "scms_step",
    "resolve_mesh",
    "find_ridge",
    "scms_trajectories",
]

log = logging.getLogger(__name__)

STEP_RULES = ("mean-shift", "fixed")


class FinderError(RuntimeError):
    pass


class EmptyRidgeError(FinderError):
    """No start point survived; ``diagnostics`` lists the per-start status."""

    def __init__(self, message: str, diagnostics: Sequence[str] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class GridSpec:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    resolution: Union[int, Tuple[int, ...]]

    def points(self) -> np.ndarray:
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("grid bounds must be matching 1-D sequences")
        res = self.resolution
        res = (res,) * lo.shape[0] if np.isscalar(res) else tuple(res)
        if len(res) != lo.shape[0] or any(int(r) < 1 for r in res):
            raise ValueError("grid resolution must be >= 1 per axis")
        axes = [
            np.array([a]) if r == 1 else np.linspace(a, b, int(r))
            for a, b, r in zip(lo, hi, res)
        ]
        return np.array(list(itertools.product(*axes)), dtype=float)

    def to_dict(self):
        res = self.resolution
        return {
            "lower": list(map(float, self.lower)),
            "upper": list(map(float, self.upper)),
            "resolution": res if np.isscalar(res) else list(res),
        }


@dataclass(frozen=True, eq=False)
class FinderConfig:
    """Settings for :func:`find_ridge`.

    ``mesh`` is ``"from-sample"``, a :class:`GridSpec`, or an explicit
    (m, d) array of start points.  A point is converged when
    ``|V^T g| <= tol_projgrad * max(|g|, grad_floor * p(x) / h)``.
    """

    mesh: Union[str, GridSpec, np.ndarray] = "from-sample"
    tol_projgrad: float = 1e-6
    max_iters: int = 500
    density_floor: float = 0.05
    step_rule: str = "mean-shift"
    step_size: float = 1.0
    grad_floor: float = 1e-2
    merge_radius: Optional[float] = None

    def __post_init__(self):
        if not self.tol_projgrad > 0:
            raise ValueError("tol_projgrad must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 <= self.density_floor < 1:
            raise ValueError("density_floor must be in [0, 1)")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.grad_floor < 0:
            raise ValueError("grad_floor must be non-negative")
        if isinstance(self.mesh, str):
            if self.mesh != "from-sample":
                raise ValueError(f"unknown mesh {self.mesh!r}")
        elif not isinstance(self.mesh, GridSpec):
            arr = np.array(self.mesh, dtype=float)
            if arr.ndim != 2:
                raise ValueError("explicit mesh must be an (m, d) array")
            arr.setflags(write=False)
            object.__setattr__(self, "mesh", arr)

    def with_mesh(self, mesh) -> "FinderConfig":
        return FinderConfig(
            mesh=mesh,
            tol_projgrad=self.tol_projgrad,
            max_iters=self.max_iters,
            density_floor=self.density_floor,
            step_rule=self.step_rule,
            step_size=self.step_size,
            grad_floor=self.grad_floor,
            merge_radius=self.merge_radius,
        )

    def to_dict(self):
        if isinstance(self.mesh, str):
            mesh = self.mesh
        elif isinstance(self.mesh, GridSpec):
            mesh = {"grid": self.mesh.to_dict()}
        else:
            mesh = {"explicit": self.mesh.tolist()}
        return {
            "mesh": mesh,
            "tol_projgrad": self.tol_projgrad,
            "max_iters": int(self.max_iters),
            "density_floor": self.density_floor,
            "step_rule": self.step_rule,
            "step_size": self.step_size,
            "grad_floor": self.grad_floor,
            "merge_radius": self.merge_radius,
        }


@dataclass(frozen=True, eq=False)
class RidgePoint:
    location: np.ndarray
    value: float
    lambda1: float
    lambda2: float
    start_index: int
    iterations: int
    frame: Optional[NormalFrame] = None


@dataclass(frozen=True, eq=False)
class RidgeSet:
    points: List[RidgePoint]
    h: float
    config: FinderConfig
    diagnostics: List[str] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def locations(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, 0))
        return np.stack([p.location for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def start_indices(self) -> np.ndarray:
        return np.array([p.start_index for p in self.points], dtype=int)


def resolve_mesh(config: FinderConfig, sample: Sample) -> np.ndarray:
    mesh = config.mesh
    if isinstance(mesh, str):
        pts = np.array(sample.points, dtype=float)
    elif isinstance(mesh, GridSpec):
        pts = mesh.points()
    else:
        pts = np.array(mesh, dtype=float)
    if pts.shape[0] == 0:
        raise FinderError("mesh resolves to no start points")
    if pts.shape[1] != sample.d:
        raise FinderError(f"mesh dimension {pts.shape[1]} does not match sample dimension {sample.d}")
    return pts


def _displacement(model: KdeModel, value, grad, step_rule: str, step_size: float):
    if step_rule == "mean-shift":
        return (model.h**2) * grad / value[:, None]
    return step_size * grad


def scms_step(model: KdeModel, x, step_rule: str = "mean-shift", step_size: float = 1.0) -> np.ndarray:
    """One SCMS update ``x + V V^T delta(x)``."""
    x = np.asarray(x, dtype=float)
    jet = model.jets(x[None, :], 2)
    if not jet.value[0] > 0:
        raise FinderError("vacuum start: density underflows to zero")
    _, vecs = eigh_desc(jet.hess)
    V = vecs[0][:, 1:]
    delta = _displacement(model, jet.value, jet.grad, step_rule, step_size)[0]
    return x + V @ (V.T @ delta)


def scms_trajectories(model: KdeModel, starts, config: FinderConfig, record: bool = False):
    """Run SCMS from every start point.

    Returns ``(locations, iterations, status, history)`` where ``status`` is
    ``"converged"``, ``"max_iters"`` or ``"vacuum"`` per start and, when
    ``record`` is set, ``history[i]`` is the list of densities visited.
    """
    X = np.array(starts, dtype=float)
    m = X.shape[0]
    iters = np.zeros(m, dtype=int)
    status = np.array(["max_iters"] * m, dtype=object)
    history = [[] for _ in range(m)] if record else None
    active = np.arange(m)
    h = model.h
    tol = config.tol_projgrad
    for it in range(int(config.max_iters) + 1):
        if active.size == 0:
            break
        jets = model.jets(X[active], 2)
        if record:
            for k, i in enumerate(active):
                history[i].append(float(jets.value[k]))
        vac = ~(jets.value > 0)
        _, vecs = eigh_desc(jets.hess)
        resid = normal_residual(jets.grad, vecs)
        gnorm = np.linalg.norm(jets.grad, axis=1)
        crit = tol * np.maximum(gnorm, config.grad_floor * jets.value / h)
        done = (resid <= crit) & ~vac
        status[active[done]] = "converged"
        status[active[vac]] = "vacuum"
        iters[active[done | vac]] = it
        keep = ~(done | vac)
        if it == config.max_iters:
            iters[active[keep]] = it
            break
        active = active[keep]
        if active.size == 0:
            break
        V = vecs[keep][:, :, 1:]
        delta = _displacement(model, jets.value[keep], jets.grad[keep], config.step_rule, config.step_size)
        coef = np.einsum("mdk,md->mk", V, delta)
        X[active] += np.einsum("mdk,mk->md", V, coef)
    return X, iters, status, history


def _merge(points: List[RidgePoint], radius: float) -> List[RidgePoint]:
    kept: List[RidgePoint] = []
    for p in points:
        if all(np.linalg.norm(p.location - q.location) > radius for q in kept):
            kept.append(p)
    return kept


def find_ridge(model: KdeModel, config: FinderConfig, frames: bool = True) -> RidgeSet:
    """Estimate the ridge of ``model`` by SCMS from the configured mesh.

    Survivors are converged points with ``lambda_2 < 0`` and density at
    least ``density_floor`` times the largest converged density.  With
    ``frames`` set, each survivor carries a :class:`NormalFrame`; points
    where the frame cannot be built are dropped with a warning.
    """
    starts = resolve_mesh(config, model.sample)
    X, iters, status, _ = scms_trajectories(model, starts, config)
    ok = np.flatnonzero(status == "converged")
    diagnostics = [str(s) for s in status]
    if ok.size == 0:
        raise EmptyRidgeError("empty ridge: no start point converged", diagnostics)

    order = 3 if frames else 2
    jets = model.jets(X[ok], order)
    lam, _ = eigh_desc(jets.hess)
    neg = lam[:, 1] < 0
    for i in ok[~neg]:
        diagnostics[i] = "lambda2>=0"
    vmax = float(np.max(jets.value[neg])) if np.any(neg) else 0.0
    floor_ok = jets.value >= config.density_floor * vmax
    for i in ok[neg & ~floor_ok]:
        diagnostics[i] = "below density floor"

    points: List[RidgePoint] = []
    for k in np.flatnonzero(neg & floor_ok):
        idx = int(ok[k])
        frame = None
        if frames:
            try:
                frame = normal_frame(jets[k])
            except GeometryError as exc:
                diagnostics[idx] = f"dropped: {exc.kind}"
                warnings.warn(f"start {idx}: {exc}", RuntimeWarning, stacklevel=2)
                continue
        points.append(
            RidgePoint(
                location=X[idx].copy(),
                value=float(jets.value[k]),
                lambda1=float(lam[k, 0]),
                lambda2=float(lam[k, 1]),
                start_index=idx,
                iterations=int(iters[idx]),
                frame=frame,
            )
        )
    if config.merge_radius:
        points = _merge(points, config.merge_radius)
    if not points:
        raise EmptyRidgeError("empty ridge: no converged point passed the filters", diagnostics)
    log.debug("find_ridge: %d of %d starts kept", len(points), len(starts))
    return RidgeSet(points=points, h=model.h, config=config, diagnostics=diagnostics)
