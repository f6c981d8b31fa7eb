"""Pointwise geometry of a density ridge.

Everything here is a pure function of a :class:`~densridge.kde.DensityJet`
(and, for the covariance, the KDE that produced it).  Batched variants
operating on stacked arrays are used by the finder's inner loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kde import DensityJet, KdeModel

__all__ = [
    "GeometryError",
    "EigenFrame",
    "NormalFrame",
    "ConditionReport",
    "eigen_frame",
    "eigh_desc",
    "projected_gradient",
    "normal_residual",
    "is_ridge_point",
    "normal_frame",
    "sigma_matrix",
    "condition_report",
]

GAP_RTOL = 1e-10
CHOL_MIN_PIVOT = 1e-12


class GeometryError(ArithmeticError):
    """A frame cannot be built at this point.

    ``kind`` is one of ``"eigengap collapse"``, ``"rank deficient M"``,
    ``"singular subspace Hessian"`` or ``"non-finite Hessian"``.
    """

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        super().__init__(f"{kind}: {detail}" if detail else kind)


def _sign_normalize(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so the entry of largest magnitude is positive.

    ``vecs`` has shape (..., d, k); ties resolve to the lowest row index.
    """
    idx = np.argmax(np.abs(vecs), axis=-2)
    lead = np.take_along_axis(vecs, idx[..., None, :], axis=-2)
    sign = np.where(lead < 0, -1.0, 1.0)
    return vecs * sign


def eigh_desc(H: np.ndarray):
    """Descending symmetric eigendecomposition of one or many matrices."""
    w, v = np.linalg.eigh(H)
    w = w[..., ::-1]
    v = v[..., :, ::-1]
    return w, _sign_normalize(v)


@dataclass(frozen=True, eq=False)
class EigenFrame:
    at: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns v_1..v_d

    @property
    def V(self) -> np.ndarray:
        """The trailing ``d - 1`` eigenvectors as a d x (d-1) matrix."""
        return self.eigenvectors[:, 1:]

    @property
    def v1(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def _require(jet: DensityJet, order: int):
    if jet.order < order:
        raise ValueError(f"need a jet of order >= {order}, got {jet.order}")


def eigen_frame(jet: DensityJet) -> EigenFrame:
    _require(jet, 2)
    H = np.asarray(jet.hess)
    if not np.all(np.isfinite(H)):
        raise GeometryError("non-finite Hessian")
    w, v = eigh_desc(H)
    return EigenFrame(at=jet.at, eigenvalues=w, eigenvectors=v)


def projected_gradient(jet: DensityJet) -> np.ndarray:
    """``V V^T g``: the gradient with its leading-eigenvector part removed."""
    V = eigen_frame(jet).V
    return V @ (V.T @ jet.grad)


def normal_residual(grad: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Norm of ``V^T g`` for stacked grads (m, d) and eigenvectors (m, d, d)."""
    proj = np.einsum("mdk,md->mk", vecs[:, :, 1:], grad)
    return np.linalg.norm(proj, axis=1)


def is_ridge_point(jet: DensityJet, tol: float, abs_floor: float = 0.0) -> bool:
    """Discrete ridge membership.

    True when ``lambda_2 < 0`` and ``|V^T g| <= tol * max(|g|, abs_floor)``.
    ``abs_floor`` is a gradient scale below which the test becomes absolute,
    which keeps near-critical points (where |g| -> 0) decidable.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    frame = eigen_frame(jet)
    if not frame.eigenvalues[1] < 0:
        return False
    g = np.asarray(jet.grad)
    resid = float(np.linalg.norm(frame.V.T @ g))
    return resid <= tol * max(float(np.linalg.norm(g)), abs_floor)


@dataclass(frozen=True, eq=False)
class NormalFrame:
    """Normal-space quantities at one point.

    ``M`` holds the gradient of ``V^T g`` column by column, ``N`` is its
    Cholesky orthonormalization, ``tangent`` spans the orthogonal
    complement of ``col(M)``, ``H_N = N^T H N`` and ``W = N H_N^{-1} N^T``.
    """

    at: np.ndarray
    M: np.ndarray
    N: np.ndarray
    tangent: np.ndarray
    H_N: np.ndarray
    W: np.ndarray
    eigen: EigenFrame

    def projector(self) -> np.ndarray:
        return self.N @ self.N.T


def subspace_W(N: np.ndarray, H: np.ndarray) -> np.ndarray:
    """``N (N^T H N)^{-1} N^T`` for an orthonormal basis ``N`` of the normal space."""
    HN = N.T @ H @ N
    HN = 0.5 * (HN + HN.T)
    try:
        W = N @ np.linalg.solve(HN, N.T)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("singular subspace Hessian", str(exc)) from exc
    return 0.5 * (W + W.T)


def normal_frame(jet: DensityJet) -> NormalFrame:
    """Build M, N, e, H_N and W from an order-3 jet.

    Column ``k`` of ``M`` is

        (lambda_k I + (v_1^T g / (lambda_k - lambda_1)) D_{v1}H) v_k

    with ``D_{v1}H[i, j] = sum_l third[i, j, l] v_1[l]``.
    """
    _require(jet, 3)
    ef = eigen_frame(jet)
    lam = ef.eigenvalues
    vecs = ef.eigenvectors
    H = np.asarray(jet.hess)
    g = np.asarray(jet.grad)
    scale = max(float(np.linalg.norm(H, 2)), np.finfo(float).tiny)
    gaps = lam[1:] - lam[0]
    if np.any(np.abs(gaps) < GAP_RTOL * scale):
        raise GeometryError("eigengap collapse", f"lambda = {lam}")

    v1 = vecs[:, 0]
    dH = np.einsum("ijl,l->ij", jet.third, v1)
    c = float(v1 @ g)
    cols = []
    for k in range(1, lam.shape[0]):
        vk = vecs[:, k]
        cols.append(lam[k] * vk + (c / (lam[k] - lam[0])) * (dH @ vk))
    M = np.stack(cols, axis=1)

    G = M.T @ M
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("rank deficient M", str(exc)) from exc
    if np.min(np.diag(L)) < CHOL_MIN_PIVOT * max(1.0, float(np.sqrt(np.max(np.diag(G))))):
        raise GeometryError("rank deficient M", f"pivots {np.diag(L)}")
    # N = M L^{-T}, i.e. solve L N^T = M^T
    N = np.linalg.solve(L, M.T).T

    _, _, vt = np.linalg.svd(M.T)
    e = vt[-1]
    e = _sign_normalize(e[:, None])[:, 0]
    e = e / np.linalg.norm(e)

    HN = N.T @ H @ N
    HN = 0.5 * (HN + HN.T)
    W = subspace_W(N, H)
    return NormalFrame(at=jet.at, M=M, N=N, tangent=e, H_N=HN, W=W, eigen=ef)


def sigma_matrix(model: KdeModel, frame: NormalFrame) -> np.ndarray:
    """Local covariance of the linearized ridge displacement.

    Returns ``h^{-d} Cov_i(W grad_phi((x - X_i) / h))`` where ``grad_phi`` is
    the gradient of the standard normal density.  With this scaling
    ``n h^{d+2} E d^2(x, R_hat) -> Trace(Sigma)``.
    """
    x = np.asarray(frame.at, dtype=np.float64)
    h = model.h
    d = model.d
    U = (x[None, :] - model.sample.points) / h
    phi = (2.0 * np.pi) ** (-d / 2) * np.exp(-0.5 * np.sum(U * U, axis=1))
    grads = -U * phi[:, None]
    Z = grads @ frame.W.T
    Zc = Z - Z.mean(axis=0)
    cov = Zc.T @ Zc / Z.shape[0]
    cov = 0.5 * (cov + cov.T)
    return cov / h**d


@dataclass(frozen=True)
class ConditionReport:
    """Eigengap and alignment diagnostics at one point.

    ``p1_margin`` is ``min(-lambda_2, (lambda_1 - lambda_2)(-lambda_2) - |g| max|p'''|)``,
    positive when surrogate constants for the eigengap condition exist.
    ``p2_lhs`` uses the unit gradient direction; ``p2_lhs_raw`` the raw one.
    """

    at: tuple
    lambda1: float
    lambda2: float
    eigengap: float
    third_product: float
    p1_margin: float
    p2_lhs: float
    p2_lhs_raw: float
    p2_rhs: float
    p2_ok: bool


def condition_report(jet: DensityJet, frame: NormalFrame) -> ConditionReport:
    _require(jet, 3)
    lam = frame.eigen.eigenvalues
    l1, l2 = float(lam[0]), float(lam[1])
    g = np.asarray(jet.grad)
    gnorm = float(np.linalg.norm(g))
    gap = l1 - l2
    prod = gnorm * float(np.max(np.abs(jet.third)))
    p1 = min(-l2, gap * (-l2) - prod)
    eg = float(frame.tangent @ g)
    lhs_raw = eg**2
    lhs = (eg / gnorm) ** 2 if gnorm > 0 else 0.0
    if l1 < 0:
        rhs = l1 / gap if gap > 0 else 0.0
        ok = True
    else:
        rhs = l1 / gap if gap > 0 else float("inf")
        ok = lhs >= rhs
    return ConditionReport(
        at=tuple(float(v) for v in jet.at),
        lambda1=l1,
        lambda2=l2,
        eigengap=gap,
        third_product=prod,
        p1_margin=p1,
        p2_lhs=lhs,
        p2_lhs_raw=lhs_raw,
        p2_rhs=rhs,
        p2_ok=bool(ok),
    )
