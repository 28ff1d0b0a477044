"""Curvature-balancing regularization loss and its finite-difference gradient.

The penalty of class i with mean curvature G_i is

    log(G_i) - log(min_j G_j)

(the negative log of the max-normalized inverse curvature, evaluated in
log space so tiny curvatures cannot overflow the normalization). The
penalty is zero exactly for the flattest class, grows with curvature, and
depends only on curvature ratios. The total loss is the sum over classes
and vanishes iff all curvatures are equal.

The combined loss couples this to an arbitrary original loss through an
epoch schedule:

    total = l_original + weight * l_curvature
    weight = log_tau(epoch) / (l_curvature / l_original)

where the ratio in the denominator is treated as a constant (no gradient
flows through it), giving total = l_original * (1 + log_tau(epoch))
whenever the curvature loss is nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import ManifoldSet
from .curvature import (
    DEFAULT_RANK_TOL,
    DEFAULT_RIDGE,
    curvatures_for_neighbors,
)
from .errors import InvalidCurvatureError, InvalidScheduleError
from .linalg import knn_all


@dataclass(frozen=True)
class LossSchedule:
    """Epoch-dependent weighting of the curvature loss; requires tau > 1, epoch >= 1."""

    tau: float
    epoch: int

    def __post_init__(self):
        if not (self.tau > 1.0 and math.isfinite(self.tau)):
            raise InvalidScheduleError(f"tau must be > 1, got {self.tau}")
        if self.epoch < 1:
            raise InvalidScheduleError(f"epoch must be >= 1, got {self.epoch}")


def _validated_curvatures(g) -> np.ndarray:
    arr = np.asarray(g, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidCurvatureError("curvature vector must be non-empty and 1-D")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise InvalidCurvatureError("curvatures must be finite and positive")
    return arr


def curvature_penalties(g) -> np.ndarray:
    """Per-class penalties log(G_i) - log(min G); the flattest class gets exactly 0."""
    arr = _validated_curvatures(g)
    logs = np.log(arr)
    return logs - logs.min()


def l_curvature(g) -> float:
    """Total curvature-balance loss: sum of the per-class penalties."""
    return float(np.sum(curvature_penalties(g)))


def combined_loss(l_original: float, l_curv: float, sched: LossSchedule) -> tuple:
    """Original loss plus schedule-weighted curvature loss: (total, weight).

    The weight is the constant log_tau(epoch) / (l_curv / l_original); when
    l_curv is zero there is nothing to weight and total is l_original.
    """
    if not (sched.tau > 1.0):
        raise InvalidScheduleError(f"tau must be > 1, got {sched.tau}")
    if sched.epoch < 1:
        raise InvalidScheduleError(f"epoch must be >= 1, got {sched.epoch}")
    if not (l_original > 0.0 and math.isfinite(l_original)):
        raise InvalidCurvatureError(f"l_original must be positive, got {l_original}")
    if l_curv < 0.0 or not math.isfinite(l_curv):
        raise InvalidCurvatureError(f"l_curvature must be >= 0, got {l_curv}")
    if l_curv == 0.0:
        return l_original, 0.0
    log_tau_epoch = math.log(sched.epoch) / math.log(sched.tau)
    weight = log_tau_epoch / (l_curv / l_original)
    return l_original + weight * l_curv, weight


def class_complexities(
    ms: ManifoldSet,
    k: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    ridge: float = DEFAULT_RIDGE,
) -> np.ndarray:
    """Mean absolute Gauss curvature of every class manifold, in class order."""
    out = np.empty(ms.n_classes)
    for pos, mat in enumerate(ms.matrices):
        nbr = knn_all(mat, k)
        curv, _ = curvatures_for_neighbors(mat, nbr, rank_tol=rank_tol, ridge=ridge)
        good = np.isfinite(curv)
        out[pos] = float(np.abs(curv[good]).mean()) if good.any() else np.nan
    return out


def l_curvature_grad_fd(
    ms: ManifoldSet,
    k: int,
    h: float,
    columns=None,
    rank_tol: float = DEFAULT_RANK_TOL,
    ridge: float = DEFAULT_RIDGE,
) -> dict:
    """Central-difference gradient of the curvature loss w.r.t. feature coordinates.

    Differentiates l_curvature(per-class mean |Gauss curvature|) end to
    end. Neighborhoods are frozen at the unperturbed configuration (the
    step h is far below any neighbor-ordering margin, and freezing keeps
    the evaluation smooth and deterministic), and each perturbation only
    re-evaluates the points whose neighborhoods contain the perturbed one.

    ``columns`` optionally restricts differentiation to a subset, given as
    {class_id: column indices}; unrequested entries are returned as 0.
    Entries whose perturbed evaluation is degenerate are NaN rather than
    aborting the whole gradient.

    Returns {class_id: (p, m_i) gradient array}.
    """
    if h <= 0.0:
        raise InvalidCurvatureError(f"step h must be positive, got {h}")
    p = ms.dim

    base = []
    for cid, mat in zip(ms.class_ids, ms.matrices):
        nbr = knn_all(mat, k)
        curv, _ = curvatures_for_neighbors(mat, nbr, rank_tol=rank_tol, ridge=ridge)
        good = np.isfinite(curv)
        absc = np.where(good, np.abs(curv), 0.0)
        base.append(
            {
                "cid": cid,
                "mat": mat,
                "nbr": nbr,
                "good": good,
                "abs": absc,
                "complexity": absc.sum() / good.sum() if good.any() else np.nan,
            }
        )
    complexities = np.array([b["complexity"] for b in base])

    def loss_with(pos: int, value: float) -> float:
        vec = complexities.copy()
        vec[pos] = value
        if not np.all(np.isfinite(vec)) or np.any(vec <= 0.0):
            return np.nan
        return l_curvature(vec)

    grads = {}
    for pos, b in enumerate(base):
        mat = b["mat"]
        n_c = mat.shape[1]
        grad = np.zeros((p, n_c))
        if columns is not None:
            wanted = np.asarray(columns.get(b["cid"], []), dtype=np.intp)
        else:
            wanted = np.arange(n_c)
        if wanted.size == 0:
            grads[b["cid"]] = grad
            continue
        for j in wanted:
            # rows whose neighborhoods contain column j, plus j itself
            hit = (b["nbr"] == j).any(axis=1)
            hit[j] = True
            rows = np.nonzero(hit)[0]
            others = np.ones(n_c, dtype=bool)
            others[rows] = False
            rest_abs = float(b["abs"][others].sum())
            rest_cnt = int(b["good"][others].sum())
            for d in range(p):
                vals = np.empty(2)
                for s, sign in enumerate((+1.0, -1.0)):
                    pert = mat.copy()
                    pert[d, j] += sign * h
                    curv, _ = curvatures_for_neighbors(
                        pert, b["nbr"], rank_tol=rank_tol, ridge=ridge, rows=rows
                    )
                    good = np.isfinite(curv)
                    cnt = rest_cnt + int(good.sum())
                    if cnt == 0:
                        vals[s] = np.nan
                        continue
                    comp = (rest_abs + float(np.abs(curv[good]).sum())) / cnt
                    vals[s] = loss_with(pos, comp)
                grad[d, j] = (vals[0] - vals[1]) / (2.0 * h)
        grads[b["cid"]] = grad
    return grads
