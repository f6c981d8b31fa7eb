"""Projection, quasi-Hausdorff and Hausdorff distances between point sets.

Continuous sets are represented by finite samples, so every quantity here
is a discrete approximation whose error is bounded by the sampling
spacing.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

__all__ = [
    "as_point_set",
    "nearest",
    "project",
    "quasi_hausdorff",
    "hausdorff",
]

_BLOCK = 2048


def as_point_set(A) -> np.ndarray:
    """Validate and return ``A`` as a non-empty finite (k, d) float array."""
    if hasattr(A, "locations"):
        A = A.locations
    arr = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if arr.size == 0 or arr.shape[0] == 0:
        raise ValueError("point set is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point set has non-finite coordinates")
    return arr


def _sq_dists(X: np.ndarray, A: np.ndarray) -> np.ndarray:
    # coordinate-wise accumulation keeps the arithmetic identical to a scalar loop
    acc = (X[:, None, 0] - A[None, :, 0]) ** 2
    for k in range(1, X.shape[1]):
        acc += (X[:, None, k] - A[None, :, k]) ** 2
    return acc


def nearest(X, A, backend: str = "brute") -> Tuple[np.ndarray, np.ndarray]:
    """Distance from each row of ``X`` to ``A`` and the argmin index.

    Ties go to the lowest index under the brute-force backend.  The
    ``"kdtree"`` backend (scipy) returns the same distances; its tie
    resolution is unspecified.
    """
    X = as_point_set(X)
    A = as_point_set(A)
    if X.shape[1] != A.shape[1]:
        raise ValueError("dimension mismatch")
    if backend == "kdtree":
        from scipy.spatial import cKDTree

        dist, idx = cKDTree(A).query(X)
        return np.asarray(dist, dtype=float), np.asarray(idx, dtype=int)
    if backend != "brute":
        raise ValueError(f"unknown backend {backend!r}")
    dist = np.empty(X.shape[0])
    idx = np.empty(X.shape[0], dtype=int)
    for s in range(0, X.shape[0], _BLOCK):
        D = _sq_dists(X[s : s + _BLOCK], A)
        j = np.argmin(D, axis=1)
        idx[s : s + _BLOCK] = j
        dist[s : s + _BLOCK] = np.sqrt(D[np.arange(D.shape[0]), j])
    return dist, idx


def project(x, A) -> Tuple[np.ndarray, float, int]:
    """Projection vector ``pi_A(x) - x``, its length, and the argmin index."""
    x = np.asarray(x, dtype=np.float64)
    A = as_point_set(A)
    dist, idx = nearest(x[None, :], A)
    j = int(idx[0])
    return A[j] - x, float(dist[0]), j


def quasi_hausdorff(A, B, backend: str = "brute") -> float:
    """``sup_{x in B} d(x, A)``, so that ``B`` lies in the tube ``A + r``."""
    dist, _ = nearest(B, A, backend)
    return float(dist.max())


def hausdorff(A, B, backend: str = "brute") -> float:
    return max(quasi_hausdorff(A, B, backend), quasi_hausdorff(B, A, backend))
