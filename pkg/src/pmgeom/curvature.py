"""Gauss curvature of point-cloud manifolds via local quadric fits.

For each point the k nearest neighbors define, through the eigenvectors
of their centered covariance, an orthonormal tangent basis and a normal
direction. Neighbor displacements are split into tangent coordinates and
a height along the normal, a quadratic form is least-squares fitted to
height as a function of tangent coordinates, and the Gauss curvature is
the determinant of that form. The complexity of a manifold is the mean
absolute curvature over its points.

The fit is performed on the m(m+1)/2 unique coefficients of the symmetric
form (fitting the full m^2 redundant monomial matrix would make the normal
equations singular) with a small ridge term for conditioning.

Tangent dimension: with r eigenvalues above ``rank_tol`` relative to the
largest, the tangent dimension is min(r, p-1), further reduced until
m(m+1)/2 <= k so the fit stays determined, and the normal is eigenvector
m+1. For full-rank neighborhoods this is the classic smallest-eigenvector
normal; for neighborhoods confined to an r-dimensional affine subspace the
normal falls in the null space, heights vanish, and the curvature is zero,
which is the correct flat-manifold answer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateNeighborhoodError,
    FitFailureError,
    InsufficientPointsError,
    InvalidInputError,
    UnreliableEstimateError,
)
from .linalg import as_point_matrix, knn, knn_all

DEFAULT_K = 40
DEFAULT_RANK_TOL = 1e-8
DEFAULT_RIDGE = 1e-10


@dataclass(frozen=True)
class TangentFrame:
    """Local frame at a point: the point, a unit normal, an orthonormal tangent basis."""

    center: np.ndarray  # (p,)
    normal: np.ndarray  # (p,)
    basis: np.ndarray  # (p, m)
    tangent_dim: int


@dataclass(frozen=True)
class QuadricFit:
    """Symmetric quadratic form fitted to neighbor heights, with RMS residual."""

    theta: np.ndarray  # (m, m), exactly symmetric
    residual: float


@dataclass(frozen=True)
class CurvatureReport:
    """Per-point Gauss curvatures of one manifold and their summaries.

    ``curvatures`` has one entry per point, NaN where the point was
    skipped; ``signed_mean`` and ``complexity`` average the successful
    points only.
    """

    curvatures: np.ndarray
    tangent_dims: np.ndarray
    signed_mean: float
    complexity: float
    n_skipped: int


def _tangent_dim(lam_desc: np.ndarray, p: int, k: int, rank_tol: float) -> int:
    """Tangent dimension from descending eigenvalues; 0 flags a degenerate neighborhood."""
    lam1 = lam_desc[0]
    if lam1 <= 0.0:
        return 0
    r = int(np.sum(lam_desc > rank_tol * lam1))
    if r < 2:
        return 0
    m = min(r, p - 1)
    while m >= 1 and m * (m + 1) // 2 > k:
        m -= 1
    return m


def tangent_frame(
    points,
    index: int,
    k: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    include_center: bool = False,
) -> TangentFrame:
    """Estimate the tangent frame at column ``index`` from its k neighbors.

    ``include_center`` adds the point itself to the neighborhood before
    the covariance is formed (a published variant of the same estimator);
    the default uses neighbors only.
    """
    z = as_point_matrix(points)
    p, n = z.shape
    if k < 3:
        raise InvalidInputError(f"need k >= 3, got {k}")
    if k > n - 1:
        raise InsufficientPointsError(f"k={k} requires at least {k + 1} points, have {n}")
    nbr = knn(z, index, k)
    return _frame_from_neighborhood(z, index, nbr, rank_tol, include_center)


def _frame_from_neighborhood(z, index, nbr, rank_tol, include_center) -> TangentFrame:
    p = z.shape[0]
    k = nbr.size
    y = z[:, nbr]
    if include_center:
        y = np.hstack([z[:, index : index + 1], y])
    yc = y - y.mean(axis=1, keepdims=True)
    cov = (yc @ yc.T) / y.shape[1]
    lam, vec = np.linalg.eigh(cov)
    lam = lam[::-1]
    vec = vec[:, ::-1]
    m = _tangent_dim(lam, p, k, rank_tol)
    if m < 1:
        raise DegenerateNeighborhoodError(
            f"neighborhood of point {index} has rank < 2; no tangent frame"
        )
    return TangentFrame(
        center=z[:, index].copy(),
        normal=vec[:, m].copy(),
        basis=vec[:, :m].copy(),
        tangent_dim=m,
    )


def project_to_tangent(frame: TangentFrame, neighbors) -> tuple:
    """Tangent coordinates (k, m) and normal heights (k,) of neighbor points."""
    nb = as_point_matrix(neighbors)
    if nb.shape[0] != frame.center.size:
        raise InvalidInputError("neighbor dimension does not match frame")
    d = nb - frame.center[:, None]
    coords = d.T @ frame.basis
    heights = d.T @ frame.normal
    return coords, heights


def _design_matrix(coords: np.ndarray) -> np.ndarray:
    """Unique-monomial design matrix for the symmetric quadric, shape (k, m(m+1)/2).

    Column order is (0,0), (0,1), ..., (0,m-1), (1,1), ..., (m-1,m-1);
    diagonal columns carry the 1/2 factor of the form so the solved
    coefficients are the theta entries themselves.
    """
    k, m = coords.shape
    cols = []
    for a in range(m):
        cols.append(0.5 * coords[:, a] ** 2)
        for b in range(a + 1, m):
            cols.append(coords[:, a] * coords[:, b])
    return np.stack(cols, axis=1) if cols else np.empty((k, 0))


def _theta_from_solution(x: np.ndarray, m: int) -> np.ndarray:
    theta = np.zeros((m, m))
    pos = 0
    for a in range(m):
        theta[a, a] = x[pos]
        pos += 1
        for b in range(a + 1, m):
            theta[a, b] = x[pos]
            theta[b, a] = x[pos]
            pos += 1
    return theta


def fit_quadric(coords, heights, ridge: float = DEFAULT_RIDGE) -> QuadricFit:
    """Least-squares symmetric quadric through the origin of the tangent frame."""
    o = np.asarray(coords, dtype=np.float64)
    t = np.asarray(heights, dtype=np.float64)
    if o.ndim != 2 or t.ndim != 1 or o.shape[0] != t.size:
        raise InvalidInputError("coords must be (k, m) and heights (k,)")
    if ridge < 0:
        raise InvalidInputError("ridge must be nonnegative")
    m = o.shape[1]
    a = _design_matrix(o)
    gram = a.T @ a + ridge * np.eye(a.shape[1])
    rhs = a.T @ t
    try:
        x = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise FitFailureError(f"quadric normal equations unsolvable: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise FitFailureError("quadric fit produced non-finite coefficients")
    resid = float(np.sqrt(np.mean((a @ x - t) ** 2)))
    return QuadricFit(theta=_theta_from_solution(x, m), residual=resid)


def _det_symmetric(theta: np.ndarray) -> float:
    """det of a symmetric matrix as a sign-tracked product of eigenvalues."""
    lam = np.linalg.eigvalsh(theta)
    if np.any(lam == 0.0):
        return 0.0
    sign = float(np.prod(np.sign(lam)))
    with np.errstate(divide="ignore"):
        logabs = float(np.sum(np.log(np.abs(lam))))
    return sign * float(np.exp(logabs))


def gauss_curvature_at(
    points,
    index: int,
    k: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    ridge: float = DEFAULT_RIDGE,
    include_center: bool = False,
) -> float:
    """Gauss curvature at one point: det of the fitted quadratic form."""
    z = as_point_matrix(points)
    frame = tangent_frame(z, index, k, rank_tol=rank_tol, include_center=include_center)
    nbr = knn(z, index, k)
    coords, heights = project_to_tangent(frame, z[:, nbr])
    fit = fit_quadric(coords, heights, ridge=ridge)
    return _det_symmetric(fit.theta)


def curvatures_for_neighbors(
    points: np.ndarray,
    nbr_idx: np.ndarray,
    rank_tol: float = DEFAULT_RANK_TOL,
    ridge: float = DEFAULT_RIDGE,
    rows=None,
    include_center: bool = False,
) -> tuple:
    """Vectorized Gauss curvature for a fixed neighbor table.

    ``nbr_idx`` is an (n, k) table as produced by ``linalg.knn_all``;
    ``rows`` optionally restricts evaluation to a subset of point indices
    (used by the finite-difference gradient, which freezes neighborhoods
    and re-evaluates only affected points). Returns (curvatures,
    tangent_dims) aligned with ``rows``; skipped points get NaN and 0.
    """
    z = np.ascontiguousarray(points, dtype=np.float64)
    p = z.shape[0]
    if rows is None:
        rows = np.arange(nbr_idx.shape[0])
    else:
        rows = np.asarray(rows, dtype=np.intp)
    k = nbr_idx.shape[1]
    nr = rows.size
    curv = np.full(nr, np.nan)
    dims = np.zeros(nr, dtype=np.intp)
    if nr == 0:
        return curv, dims

    zt = z.T  # (n, p)
    nb = zt[nbr_idx[rows]]  # (nr, k, p)
    if include_center:
        pts_own = zt[rows][:, None, :]
        stacked = np.concatenate([pts_own, nb], axis=1)
        yc = stacked - stacked.mean(axis=1, keepdims=True)
        covs = np.einsum("gkp,gkq->gpq", yc, yc) / stacked.shape[1]
    else:
        yc = nb - nb.mean(axis=1, keepdims=True)
        covs = np.einsum("gkp,gkq->gpq", yc, yc) / k
    lam, vec = np.linalg.eigh(covs)
    lam = lam[:, ::-1]
    vec = vec[:, :, ::-1]

    lam1 = lam[:, 0]
    with np.errstate(invalid="ignore"):
        ranks = np.sum(lam > rank_tol * lam1[:, None], axis=1)
    # largest m with m(m+1)/2 <= k keeps the fit determined
    m_cap = int((np.sqrt(8.0 * k + 1.0) - 1.0) // 2)
    m_all = np.minimum(np.minimum(ranks, p - 1), m_cap)
    m_all[(ranks < 2) | (lam1 <= 0.0)] = 0

    diffs = nb - zt[rows][:, None, :]  # (nr, k, p)
    for m in np.unique(m_all):
        m = int(m)
        if m < 1:
            continue
        sel = np.nonzero(m_all == m)[0]
        basis = vec[sel][:, :, :m]  # (g, p, m)
        normal = vec[sel][:, :, m]  # (g, p)
        d = diffs[sel]  # (g, k, p)
        coords = np.einsum("gkp,gpm->gkm", d, basis)
        heights = np.einsum("gkp,gp->gk", d, normal)
        # design columns: (a,a) -> o_a^2/2, (a,b<a..) pairwise products
        cols = []
        for a in range(m):
            cols.append(0.5 * coords[:, :, a] ** 2)
            for b in range(a + 1, m):
                cols.append(coords[:, :, a] * coords[:, :, b])
        a_mat = np.stack(cols, axis=2)  # (g, k, q)
        q = a_mat.shape[2]
        gram = np.einsum("gkq,gkr->gqr", a_mat, a_mat) + ridge * np.eye(q)
        rhs = np.einsum("gkq,gk->gq", a_mat, heights)
        try:
            x = np.linalg.solve(gram, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            x = np.full((sel.size, q), np.nan)
            for j in range(sel.size):
                try:
                    x[j] = np.linalg.solve(gram[j], rhs[j])
                except np.linalg.LinAlgError:
                    pass  # stays NaN -> skipped
        theta = np.zeros((sel.size, m, m))
        pos = 0
        for a in range(m):
            theta[:, a, a] = x[:, pos]
            pos += 1
            for b in range(a + 1, m):
                theta[:, a, b] = x[:, pos]
                theta[:, b, a] = x[:, pos]
                pos += 1
        ok = np.all(np.isfinite(x), axis=1)
        lam_t = np.linalg.eigvalsh(np.where(ok[:, None, None], theta, np.eye(m)))
        signs = np.prod(np.sign(lam_t), axis=1)
        with np.errstate(divide="ignore"):
            logabs = np.sum(np.log(np.abs(lam_t)), axis=1)
        dets = np.where(np.any(lam_t == 0.0, axis=1), 0.0, signs * np.exp(logabs))
        curv[sel] = np.where(ok, dets, np.nan)
        dims[sel] = np.where(ok, m, 0)
    return curv, dims


def mean_gauss_curvature(
    points,
    k: int = DEFAULT_K,
    rank_tol: float = DEFAULT_RANK_TOL,
    ridge: float = DEFAULT_RIDGE,
    include_center: bool = False,
) -> CurvatureReport:
    """Gauss curvature at every point of a manifold plus summary statistics.

    Points with degenerate neighborhoods or failed fits are skipped and
    counted; if more than half the points are skipped the estimate is
    refused.
    """
    z = as_point_matrix(points)
    n = z.shape[1]
    if k < 3:
        raise InvalidInputError(f"need k >= 3, got {k}")
    if n < k + 1:
        raise InsufficientPointsError(f"k={k} requires at least {k + 1} points, have {n}")
    nbr = knn_all(z, k)
    curv, dims = curvatures_for_neighbors(
        z, nbr, rank_tol=rank_tol, ridge=ridge, include_center=include_center
    )
    good = np.isfinite(curv)
    n_skipped = int(n - good.sum())
    if n_skipped > n // 2:
        raise UnreliableEstimateError(
            f"{n_skipped}/{n} points skipped; curvature estimate unreliable"
        )
    vals = curv[good]
    return CurvatureReport(
        curvatures=curv,
        tangent_dims=dims,
        signed_mean=float(vals.mean()),
        complexity=float(np.abs(vals).mean()),
        n_skipped=n_skipped,
    )
