"""Gaussian kernel density estimation with closed-form derivatives.

The estimator is

    p_h(x) = 1 / (n h^d) * sum_i phi((x - X_i) / h)

where ``phi`` is the standard d-variate normal density.  With
``u = (x - X_i) / h`` the derivatives of each summand are

    grad   : -(1/h)   u phi(u)
    hess   :  (1/h^2) (u u^T - I) phi(u)
    third  :  (1/h^3) (-u_i u_j u_k + u_i d_jk + u_j d_ik + u_k d_ij) phi(u)

All orders are accumulated in a single pass over the sample.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "Sample",
    "KdeModel",
    "DensityJet",
    "JetBatch",
    "InputError",
    "kde_jet",
    "silverman_bandwidth",
    "sup_norm_diff",
    "load_sample",
]

# query rows per block; bounds the (block, n) weight matrix
_TARGET_BLOCK_ELEMS = 4_000_000


class InputError(ValueError):
    """Raised for malformed or degenerate user input."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered ``n x d`` point cloud.

    Row order is part of the identity of a sample: bootstrap indices refer
    to it.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise InputError(f"sample must be a 2-D array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise InputError("sample is empty")
        if pts.shape[1] < 2:
            raise InputError("ridges need ambient dimension d >= 2")
        if not np.all(np.isfinite(pts)):
            raise InputError("sample contains non-finite coordinates")
        object.__setattr__(self, "points", _readonly(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def take(self, indices) -> "Sample":
        return Sample(self.points[np.asarray(indices, dtype=np.intp)])

    def __len__(self):
        return self.n


def load_sample(path: Union[str, Path], header: bool = False) -> Sample:
    """Read a sample from CSV (one point per row) or JSON (array of arrays)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    else:
        reader = csv.reader(io.StringIO(text))
        rows = [r for r in reader if r and any(c.strip() for c in r)]
        if header:
            rows = rows[1:]
    try:
        arr = np.array([[float(c) for c in row] for row in rows], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: non-numeric entry: {exc}") from exc
    if arr.ndim != 2:
        raise InputError(f"{path}: rows have inconsistent lengths")
    return Sample(arr)


@dataclass(frozen=True, eq=False)
class DensityJet:
    """Value and derivatives of a density at one point.

    Fields above ``order`` are ``None``.
    """

    at: np.ndarray
    value: float
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None
    third: Optional[np.ndarray] = None
    order: int = 0

    @property
    def d(self) -> int:
        return self.at.shape[0]


@dataclass(frozen=True, eq=False)
class JetBatch:
    """Jets at ``m`` query points stored as stacked arrays."""

    at: np.ndarray
    value: np.ndarray
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None
    third: Optional[np.ndarray] = None
    order: int = 0

    def __len__(self):
        return self.at.shape[0]

    def __getitem__(self, i) -> DensityJet:
        pick = lambda a: None if a is None else a[i]  # noqa: E731
        return DensityJet(
            at=self.at[i],
            value=float(self.value[i]),
            grad=pick(self.grad),
            hess=pick(self.hess),
            third=pick(self.third),
            order=self.order,
        )


def _sym3_index(d: int) -> np.ndarray:
    """Flat index mapping each (i, j, k) to its sorted representative."""
    idx = np.empty((d, d, d), dtype=np.intp)
    for i, j, k in itertools.product(range(d), repeat=3):
        a, b, c = sorted((i, j, k))
        idx[i, j, k] = (a * d + b) * d + c
    return idx.ravel()


def _mirror2(h: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one in a stack of matrices."""
    d = h.shape[-1]
    iu, ju = np.triu_indices(d, 1)
    h[..., ju, iu] = h[..., iu, ju]
    return h


@dataclass(frozen=True, eq=False)
class KdeModel:
    """Gaussian KDE over a fixed sample with bandwidth ``h``.

    ``cutoff`` (in bandwidth units) optionally drops kernel terms with
    ``|u| > cutoff``; the default keeps exact sums.
    """

    sample: Sample
    h: float
    cutoff: Optional[float] = None
    _sym3: np.ndarray = field(init=False, repr=False)
    _center: np.ndarray = field(init=False, repr=False)
    _ysq: np.ndarray = field(init=False, repr=False)
    _feature_cache: dict = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.sample, Sample):
            object.__setattr__(self, "sample", Sample(self.sample))
        h = float(self.h)
        if not (math.isfinite(h) and h > 0):
            raise InputError(f"bandwidth must be positive and finite, got {self.h!r}")
        object.__setattr__(self, "h", h)
        if self.cutoff is not None and not self.cutoff > 0:
            raise InputError("cutoff must be positive")
        object.__setattr__(self, "_sym3", _sym3_index(self.sample.d))
        center = self.sample.points.mean(axis=0)
        Y = self.sample.points - center
        object.__setattr__(self, "_center", center)
        object.__setattr__(self, "_ysq", np.sum(Y * Y, axis=1))
        object.__setattr__(self, "_feature_cache", {})

    @property
    def d(self) -> int:
        return self.sample.d

    @property
    def n(self) -> int:
        return self.sample.n

    def jets(self, x, order: int = 2) -> JetBatch:
        """Evaluate jets up to ``order`` at each row of ``x`` (shape (m, d))."""
        if order not in (0, 1, 2, 3):
            raise InputError(f"order must be 0..3, got {order}")
        X = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if X.shape[-1] != self.d:
            raise InputError(f"query has dimension {X.shape[-1]}, model has {self.d}")
        if not np.all(np.isfinite(X)):
            raise InputError("query point is not finite")
        m, d = X.shape
        n = self.n
        per_row = n * 4
        block = max(1, _TARGET_BLOCK_ELEMS // max(per_row, 1))

        value = np.empty(m)
        grad = np.empty((m, d)) if order >= 1 else None
        hess = np.empty((m, d, d)) if order >= 2 else None
        third = np.empty((m, d, d, d)) if order >= 3 else None
        for s in range(0, m, block):
            sl = slice(s, min(m, s + block))
            out = self._block(X[sl], order)
            value[sl] = out[0]
            if order >= 1:
                grad[sl] = out[1]
            if order >= 2:
                hess[sl] = out[2]
            if order >= 3:
                third[sl] = out[3]
        return JetBatch(at=X, value=value, grad=grad, hess=hess, third=third, order=order)

    def _features(self, order: int) -> np.ndarray:
        """Per-sample moment features [1, Y, Y (x) Y, Y (x) Y (x) Y] about the mean."""
        cache = self._feature_cache
        if order not in cache:
            Y = self.sample.points - self._center
            n, d = Y.shape
            cols = [np.ones((n, 1))]
            if order >= 1:
                cols.append(Y)
            if order >= 2:
                cols.append((Y[:, :, None] * Y[:, None, :]).reshape(n, -1))
            if order >= 3:
                cols.append((Y[:, :, None, None] * Y[:, None, :, None] * Y[:, None, None, :]).reshape(n, -1))
            cache[order] = np.ascontiguousarray(np.hstack(cols))
        return cache[order]

    def _block(self, X: np.ndarray, order: int):
        h = self.h
        d = self.d
        Y = self.sample.points - self._center
        y = X - self._center
        r2 = (np.sum(y * y, axis=1)[:, None] - 2.0 * (y @ Y.T) + self._ysq[None, :]) / h**2
        np.maximum(r2, 0.0, out=r2)
        w = np.exp(-0.5 * r2)
        if self.cutoff is not None:
            w[r2 > self.cutoff**2] = 0.0
        w *= (2.0 * math.pi) ** (-d / 2) / (self.n * h**d)
        S = w @ self._features(order)
        s0 = S[:, 0]
        out = [s0]
        if order == 0:
            return out
        s1 = S[:, 1 : 1 + d]
        # first moment of u: sum_i w u_i
        m1 = (s0[:, None] * y - s1) / h
        out.append(-m1 / h)
        if order == 1:
            return out
        s2 = S[:, 1 + d : 1 + d + d * d].reshape(-1, d, d)
        yy = y[:, :, None] * y[:, None, :]
        ys1 = y[:, :, None] * s1[:, None, :]
        m2 = (s0[:, None, None] * yy - ys1 - ys1.transpose(0, 2, 1) + s2) / h**2
        hess = m2.copy()
        hess[:, range(d), range(d)] -= s0[:, None]
        out.append(_mirror2(hess) / h**2)
        if order == 2:
            return out
        s3 = S[:, 1 + d + d * d :].reshape(-1, d, d, d)
        yyy = yy[:, :, :, None] * y[:, None, None, :]
        yys1 = yy[:, :, :, None] * s1[:, None, None, :]
        ys2 = y[:, :, None, None] * s2[:, None, :, :]
        m3 = (
            s0[:, None, None, None] * yyy
            - (yys1 + yys1.transpose(0, 1, 3, 2) + yys1.transpose(0, 3, 2, 1))
            + (ys2 + ys2.transpose(0, 2, 1, 3) + ys2.transpose(0, 3, 2, 1))
            - s3
        ) / h**3
        eye = np.eye(d)
        lin = (
            m1[:, :, None, None] * eye[None, None, :, :]
            + m1[:, None, :, None] * eye[None, :, None, :]
            + m1[:, None, None, :] * eye[None, :, :, None]
        )
        t = (lin - m3) / h**3
        t = t.reshape(t.shape[0], -1)[:, self._sym3].reshape(-1, d, d, d)
        out.append(t)
        return out

    def jet(self, x, order: int = 2) -> DensityJet:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise InputError("jet() takes a single point; use jets() for batches")
        return self.jets(x[None, :], order)[0]

    def density(self, x) -> np.ndarray:
        return self.jets(x, 0).value


def kde_jet(model: KdeModel, x, order: int = 2) -> DensityJet:
    """Jet of ``model`` at point ``x`` up to the given derivative order."""
    return model.jet(x, order)


def silverman_bandwidth(sample: Sample) -> float:
    """Multivariate normal-reference bandwidth.

    h = s * (4 / ((d + 2) n)) ** (1 / (d + 4)), with ``s`` the mean of the
    per-coordinate sample standard deviations.
    """
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    n, d = sample.n, sample.d
    if n < 2:
        raise InputError("bandwidth selection needs n >= 2")
    s = float(np.mean(np.std(sample.points, axis=0, ddof=1)))
    if not s > 0:
        raise InputError("zero scale: all sample points are identical")
    return s * (4.0 / ((d + 2) * n)) ** (1.0 / (d + 4))


def sup_norm_diff(model_a: KdeModel, model_b: KdeModel, grid: Sequence, k: int = 0) -> float:
    """Grid approximation of the derivative sup-norm ``max_{j<=k} ||p_a - p_b||^(j)``.

    Only grid points are inspected, so the result is a lower bound on the
    true norm.
    """
    G = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    if G.shape[0] == 0:
        raise InputError("grid is empty")
    if k not in (0, 1, 2, 3):
        raise InputError("k must be 0..3")
    ja = model_a.jets(G, k)
    jb = model_b.jets(G, k)
    best = float(np.max(np.abs(ja.value - jb.value)))
    for name in ("grad", "hess", "third")[:k]:
        diff = np.abs(getattr(ja, name) - getattr(jb, name))
        best = max(best, float(diff.max()))
    return best
