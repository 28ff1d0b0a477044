"""Volume and one-vs-rest separation degree of point-cloud manifolds.

Volume of a cloud Z with m columns:

    Vol(Z) = 1/2 * log2 det(I + (1/m) Z~ Z~^T)

where Z~ is Z centered at its column mean (``center=True``, the default)
or Z itself (``center=False``). Separation of class i against the rest:

    S(M^i) = (Vol(Z) - Vol(Z')) / Vol(Z_i)

with Z the concatenation of all classes, Z' the concatenation without
class i, and each covariance normalized by its own column count.

Separation defaults to uncentered volumes, which is the form whose
subadditivity (and hence the larger-manifold-separates-more ordering) is
an actual theorem; the centered variant is translation invariant and is
what reproduces the sphere-distance curves. Pass ``center=True`` to get
the latter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import ManifoldSet
from .errors import DegenerateManifoldError, InvalidInputError
from .linalg import covariance, logdet_i_plus

# Vol(Z_i) at or below this is treated as a degenerate (zero-volume) manifold.
DEGENERATE_VOL = 1e-12


@dataclass(frozen=True)
class SeparationReport:
    """Per-class separation degrees and the volumes they were built from."""

    class_ids: tuple
    separation: tuple
    class_volumes: tuple
    total_volume: float
    centered: bool


def manifold_volume(z, center: bool = True) -> float:
    """Generalized volume of the subspace spanned by a (p, m) cloud.

    Zero only for degenerate clouds (a single point, or exact duplicates,
    when centered); positive otherwise, and valid for rank-deficient
    clouds since the identity shift removes the zero eigenvalues.
    """
    return 0.5 * logdet_i_plus(covariance(z, center=center))


def separation_degree(ms: ManifoldSet, class_id: int, center: bool = False) -> float:
    """Definitional one-vs-rest separation (Vol(Z) - Vol(Z')) / Vol(Z_i)."""
    if ms.n_classes < 2:
        raise InvalidInputError("separation needs at least 2 classes")
    zi = ms.matrix_for(class_id)
    vol_i = manifold_volume(zi, center=center)
    if vol_i <= DEGENERATE_VOL:
        raise DegenerateManifoldError(
            f"class {class_id} has zero volume; separation undefined"
        )
    vol_all = manifold_volume(ms.stacked(), center=center)
    vol_rest = manifold_volume(ms.stacked(exclude=class_id), center=center)
    return (vol_all - vol_rest) / vol_i


def separation_degree_closed_form(ms: ManifoldSet, class_id: int) -> float:
    """Closed-form separation via three log-determinants (uncentered).

    Algebraically log_delta det((I + Cov(Z'))^-1 (I + Cov(Z))) with
    delta = det(I + Cov(Z_i)), but evaluated entirely in log-eigenvalue
    space; the determinant products are never materialized.
    """
    if ms.n_classes < 2:
        raise InvalidInputError("separation needs at least 2 classes")
    zi = ms.matrix_for(class_id)
    log_delta = logdet_i_plus(covariance(zi, center=False))
    if log_delta <= DEGENERATE_VOL:
        raise DegenerateManifoldError(
            f"class {class_id} has det(I + Cov) <= 1; separation undefined"
        )
    ld_all = logdet_i_plus(covariance(ms.stacked(), center=False))
    ld_rest = logdet_i_plus(covariance(ms.stacked(exclude=class_id), center=False))
    return (ld_all - ld_rest) / log_delta


def separation_all(ms: ManifoldSet, center: bool = False) -> SeparationReport:
    """Separation degree of every class, sharing one Vol(Z) evaluation."""
    if ms.n_classes < 2:
        raise InvalidInputError("separation needs at least 2 classes")
    vol_all = manifold_volume(ms.stacked(), center=center)
    vols = []
    seps = []
    for cid, zi in zip(ms.class_ids, ms.matrices):
        vol_i = manifold_volume(zi, center=center)
        if vol_i <= DEGENERATE_VOL:
            raise DegenerateManifoldError(
                f"class {cid} has zero volume; separation undefined"
            )
        vol_rest = manifold_volume(ms.stacked(exclude=cid), center=center)
        vols.append(vol_i)
        seps.append((vol_all - vol_rest) / vol_i)
    if not np.all(np.isfinite(seps)):
        raise InvalidInputError("non-finite separation value")
    return SeparationReport(
        class_ids=ms.class_ids,
        separation=tuple(seps),
        class_volumes=tuple(vols),
        total_volume=vol_all,
        centered=center,
    )
