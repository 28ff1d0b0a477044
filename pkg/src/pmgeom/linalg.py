"""Dense symmetric linear algebra and exact neighbor search.

Conventions used throughout the package:

* a point cloud is a float64 array of shape ``(p, n)`` whose *columns* are
  points;
* symmetric eigensystems are returned with eigenvalues sorted descending
  and eigenvectors as matching orthonormal columns.

Eigendecomposition is delegated to LAPACK via ``numpy.linalg.eigh``; its
results are deterministic for a fixed build, which is all the reproducible
tests require.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InsufficientPointsError, InvalidInputError, NotPsdError

# Eigenvalues of PSD inputs below this magnitude are rounding noise and are
# clamped to zero; anything more negative than NEG_EIG_ERROR is a real
# violation and raises.
NEG_EIG_CLAMP = 1e-9
NEG_EIG_ERROR = 1e-6

SYMMETRY_TOL = 1e-8


class SymEigen(NamedTuple):
    """Eigenvalues (descending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_point_matrix(points) -> np.ndarray:
    """Validate and return a finite float64 (p, n) matrix."""
    a = np.asarray(points, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"expected a 2-D point matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("point matrix contains non-finite entries")
    return a


def covariance(points, center: bool = True) -> np.ndarray:
    """Sample covariance (1/m) Z Z^T of a (p, m) cloud, optionally centered.

    The 1/m normalizer (not 1/(m-1)) matches the volume definition this
    package is built around.
    """
    z = as_point_matrix(points)
    m = z.shape[1]
    if center:
        z = z - z.mean(axis=1, keepdims=True)
    cov = (z @ z.T) / m
    # exact symmetry, cheap insurance against round-off drift
    return (cov + cov.T) / 2.0


def sym_eigen(s) -> SymEigen:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    The input is symmetrized by (S + S^T)/2 before factorization; inputs
    that are asymmetric beyond ``SYMMETRY_TOL`` (relative) raise.
    """
    a = np.asarray(s, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > SYMMETRY_TOL * scale:
        raise InvalidInputError("matrix is not symmetric within tolerance")
    a = (a + a.T) / 2.0
    lam, u = np.linalg.eigh(a)
    order = np.argsort(lam, kind="stable")[::-1]
    return SymEigen(lam[order], u[:, order])


def logdet_i_plus(s) -> float:
    """log2 det(I + S) for PSD S, computed as sum of log2(1 + eigenvalue).

    Never forms the determinant itself, so it is overflow-safe for any
    matrix size this package handles. Slightly negative eigenvalues (down
    to -NEG_EIG_ERROR) are treated as rounding noise and clamped to zero.

    Base 2 is the volume convention used throughout this package; the
    natural-log variant is ``logdet_i_plus_nat``.
    """
    lam, _ = sym_eigen(s)
    if lam[-1] < -NEG_EIG_ERROR:
        raise NotPsdError(f"matrix has eigenvalue {lam[-1]:.3e} < -{NEG_EIG_ERROR:.0e}")
    lam = np.maximum(lam, 0.0)
    return float(np.sum(np.log2(1.0 + lam)))


def logdet_i_plus_nat(s) -> float:
    """ln det(I + S) for PSD S; see logdet_i_plus."""
    return logdet_i_plus(s) * float(np.log(2.0))


def knn(points, query_index: int, k: int) -> np.ndarray:
    """Indices of the k nearest points to column ``query_index``, excluding it.

    Exact brute-force Euclidean search. Ties are broken by ascending index,
    which keeps results reproducible across platforms.
    """
    z = as_point_matrix(points)
    n = z.shape[1]
    if not 0 <= query_index < n:
        raise InvalidInputError(f"query index {query_index} out of range for {n} points")
    if k < 1 or k >= n:
        raise InsufficientPointsError(f"need 1 <= k <= n-1, got k={k} with n={n}")
    d = np.linalg.norm(z - z[:, query_index : query_index + 1], axis=0)
    d[query_index] = np.inf
    # stable sort on distances preserves ascending index among ties
    order = np.argsort(d, kind="stable")
    return order[:k]


def knn_all(points, k: int) -> np.ndarray:
    """Neighbor index table (n, k) for every point, same semantics as knn.

    Computes distances in query blocks to bound memory at large n.
    """
    z = as_point_matrix(points)
    n = z.shape[1]
    if k < 1 or k >= n:
        raise InsufficientPointsError(f"need 1 <= k <= n-1, got k={k} with n={n}")
    out = np.empty((n, k), dtype=np.intp)
    sq = np.sum(z * z, axis=0)
    block = max(1, min(n, int(4e6) // max(n, 1)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        g = z[:, start:stop].T @ z  # (b, n)
        d2 = sq[start:stop, None] - 2.0 * g + sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        idx = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = idx[:, :k]
    return out
