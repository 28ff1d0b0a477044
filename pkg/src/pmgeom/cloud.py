"""Labeled point clouds and their per-class partition into manifolds.

A :class:`LabeledCloud` is the universal input: a (p, n) matrix of points
plus one integer class id per point. A :class:`ManifoldSet` is the same
data regrouped as one (p, m_i) matrix per class, which is the shape every
geometric measurement consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .linalg import as_point_matrix


@dataclass(frozen=True)
class LabeledCloud:
    """p-dimensional points (columns) with one class id in [0, C) per point."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = as_point_matrix(self.points)
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or lab.size != pts.shape[1]:
            raise InvalidInputError(
                f"label count {lab.size} does not match point count {pts.shape[1]}"
            )
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(lab == lab.astype(np.int64)):
                raise InvalidInputError("labels must be integers")
        lab = lab.astype(np.int64)
        if lab.size and lab.min() < 0:
            raise InvalidInputError("labels must be nonnegative")
        c = int(lab.max()) + 1 if lab.size else 0
        present = np.unique(lab)
        if present.size != c:
            missing = sorted(set(range(c)) - set(present.tolist()))
            raise InvalidInputError(f"class ids missing from cloud: {missing}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    @property
    def dim(self) -> int:
        return self.points.shape[0]

    @property
    def n_points(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class ManifoldSet:
    """One (p, m_i) feature matrix per class, all sharing dimension p."""

    matrices: tuple = field(default_factory=tuple)
    class_ids: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.matrices) != len(self.class_ids):
            raise InvalidInputError("one class id per matrix required")
        if not self.matrices:
            raise InvalidInputError("a ManifoldSet needs at least one class")
        mats = tuple(as_point_matrix(m) for m in self.matrices)
        p = mats[0].shape[0]
        for cid, m in zip(self.class_ids, mats):
            if m.shape[0] != p:
                raise InvalidInputError(
                    f"class {cid} has dimension {m.shape[0]}, expected {p}"
                )
        if len(set(self.class_ids)) != len(self.class_ids):
            raise InvalidInputError("duplicate class ids")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))

    @classmethod
    def from_labeled_cloud(cls, cloud: LabeledCloud) -> "ManifoldSet":
        ids = sorted(set(cloud.labels.tolist()))
        mats = tuple(cloud.points[:, cloud.labels == cid] for cid in ids)
        return cls(matrices=mats, class_ids=tuple(ids))

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.matrices)

    def counts(self) -> tuple:
        return tuple(m.shape[1] for m in self.matrices)

    def matrix_for(self, class_id: int) -> np.ndarray:
        try:
            return self.matrices[self.class_ids.index(class_id)]
        except ValueError:
            raise InvalidInputError(f"class id {class_id} not in set") from None

    def stacked(self, exclude: int | None = None) -> np.ndarray:
        """Horizontal concatenation of all class matrices, optionally omitting one class."""
        mats = [
            m for cid, m in zip(self.class_ids, self.matrices) if cid != exclude
        ]
        if not mats:
            raise InvalidInputError("no classes left after exclusion")
        return np.hstack(mats)
