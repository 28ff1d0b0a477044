"""FIFO feature pool and the epoch-gated dynamic regularization protocol.

The pool stores whole batches of (features, labels) with strictly
increasing sequence numbers. The protocol fills the pool during epoch 1,
rotates it (dequeue oldest, enqueue newest) from epoch 2 on, and switches
the per-iteration action from plain original-loss to
curvature-plus-combined-loss once the warmup epoch count n is reached.

Pool values are plain data; all operations return updated copies, so a
snapshot handed to a metric worker can never be mutated underneath it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .cloud import ManifoldSet
from .errors import (
    EmptyPoolError,
    IncompletePoolError,
    InvalidInputError,
    InvalidStateError,
)
from .linalg import as_point_matrix

DEFAULT_WARMUP_EPOCHS = 5


class Phase(Enum):
    FILLING = "filling"
    WARMUP = "warmup"
    ACTIVE = "active"


class Action(Enum):
    ORIGINAL_LOSS = "original-loss"
    COMBINED_LOSS = "compute-curvature-and-combined-loss"


@dataclass(frozen=True)
class BatchRecord:
    features: np.ndarray  # (p, b)
    labels: np.ndarray  # (b,)
    seq: int

    @property
    def size(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class FeaturePool:
    """FIFO store of feature batches, capped at ``capacity`` total samples."""

    dim: int
    capacity: int
    warmup_epochs: int = DEFAULT_WARMUP_EPOCHS
    records: tuple = field(default_factory=tuple)
    next_seq: int = 0

    @property
    def n_samples(self) -> int:
        return sum(r.size for r in self.records)

    @property
    def n_batches(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class DcrState:
    """Protocol position: current epoch/iteration and the derived phase."""

    epoch: int = 1
    iteration: int = 0
    iterations_per_epoch: int = 1
    total_epochs: int = 1
    warmup_epochs: int = DEFAULT_WARMUP_EPOCHS

    @property
    def phase(self) -> Phase:
        if self.epoch == 1:
            return Phase.FILLING
        if self.epoch < self.warmup_epochs:
            return Phase.WARMUP
        return Phase.ACTIVE


def enqueue_batch(pool: FeaturePool, features, labels) -> FeaturePool:
    """Append a batch with the next sequence number."""
    f = as_point_matrix(features)
    lab = np.asarray(labels, dtype=np.int64)
    if f.shape[0] != pool.dim:
        raise InvalidInputError(
            f"feature dim {f.shape[0]} does not match pool dim {pool.dim}"
        )
    if lab.ndim != 1 or lab.size != f.shape[1]:
        raise InvalidInputError("one label per feature column required")
    if f.shape[1] < 1:
        raise InvalidInputError("batch must contain at least one sample")
    rec = BatchRecord(features=f.copy(), labels=lab.copy(), seq=pool.next_seq)
    return replace(pool, records=pool.records + (rec,), next_seq=pool.next_seq + 1)


def dequeue_oldest(pool: FeaturePool) -> tuple:
    """Remove and return the batch with the smallest sequence number."""
    if not pool.records:
        raise EmptyPoolError("cannot dequeue from an empty pool")
    oldest = min(pool.records, key=lambda r: r.seq)
    rest = tuple(r for r in pool.records if r.seq != oldest.seq)
    return replace(pool, records=rest), oldest


def dcr_tick(state: DcrState, pool: FeaturePool, features, labels) -> tuple:
    """Advance the protocol by one iteration: returns (state', pool', action).

    Epoch 1 only enqueues; later epochs dequeue the oldest batch and
    enqueue the new one; the action flips to combined-loss once the epoch
    reaches the warmup count.
    """
    if state.epoch > state.total_epochs:
        raise InvalidStateError(
            f"tick after terminal epoch {state.total_epochs}"
        )
    if state.warmup_epochs != pool.warmup_epochs:
        raise InvalidStateError("state and pool disagree on warmup epochs")

    if state.epoch == 1:
        pool = enqueue_batch(pool, features, labels)
        action = Action.ORIGINAL_LOSS
    else:
        pool, _ = dequeue_oldest(pool)
        pool = enqueue_batch(pool, features, labels)
        action = (
            Action.ORIGINAL_LOSS
            if state.epoch < state.warmup_epochs
            else Action.COMBINED_LOSS
        )

    iteration = state.iteration + 1
    epoch = state.epoch
    if iteration >= state.iterations_per_epoch:
        iteration = 0
        epoch += 1
    return replace(state, epoch=epoch, iteration=iteration), pool, action


def snapshot_by_class(pool: FeaturePool) -> ManifoldSet:
    """Per-class feature matrices assembled from every stored batch."""
    ms, _ = snapshot_with_origins(pool)
    return ms


def snapshot_with_origins(pool: FeaturePool) -> tuple:
    """Snapshot plus, per class, the sequence number each column came from.

    Returns (ManifoldSet, {class_id: (m_i,) array of batch seq numbers}).
    The origins let a caller locate the columns contributed by a specific
    batch, e.g. the most recent one.
    """
    if not pool.records:
        raise IncompletePoolError("pool is empty; nothing to snapshot")
    feats = np.hstack([r.features for r in pool.records])
    labels = np.concatenate([r.labels for r in pool.records])
    seqs = np.concatenate([np.full(r.size, r.seq, dtype=np.int64) for r in pool.records])
    class_ids = sorted(set(labels.tolist()))
    if class_ids != list(range(len(class_ids))) or len(class_ids) < 1:
        missing = sorted(set(range(int(labels.max()) + 1)) - set(class_ids))
        raise IncompletePoolError(f"pool is missing classes: {missing}")
    mats = []
    origins = {}
    for cid in class_ids:
        mask = labels == cid
        mats.append(feats[:, mask])
        origins[cid] = seqs[mask]
    return ManifoldSet(matrices=tuple(mats), class_ids=tuple(class_ids)), origins
