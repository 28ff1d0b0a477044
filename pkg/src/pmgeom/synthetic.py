"""Deterministic generators for the synthetic objects the experiments use.

All generators are pure functions of their arguments: the seed feeds a
fresh numpy PCG64 generator, whose output stream is pinned by reference
vectors in the test suite, so a given (arguments, seed) pair always
produces byte-identical output.
"""

from __future__ import annotations

import numpy as np

from .cloud import LabeledCloud
from .errors import InvalidInputError


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed))


def sphere_cloud(radius: float, center, n: int, seed: int, mode: str = "surface") -> np.ndarray:
    """n samples of a 3-D sphere of given radius and center, shape (3, n).

    ``surface`` draws unit directions (normalized Gaussians) scaled to the
    radius; ``ball`` additionally scales each point by U^(1/3) for a
    uniform fill.
    """
    if radius <= 0:
        raise InvalidInputError("radius must be positive")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    c = np.asarray(center, dtype=np.float64).reshape(-1)
    if c.size != 3:
        raise InvalidInputError("center must be a 3-vector")
    if mode not in ("surface", "ball"):
        raise InvalidInputError(f"unknown sphere mode {mode!r}")
    g = _rng(seed)
    v = g.standard_normal((3, n))
    v /= np.linalg.norm(v, axis=0, keepdims=True)
    if mode == "ball":
        v *= g.uniform(size=n) ** (1.0 / 3.0)
    return radius * v + c[:, None]


def saddle_cloud(w: float, n: int, seed: int) -> np.ndarray:
    """Exact samples of the saddle surface Z = w (X^2 - Y^2), X,Y ~ U[-1,1]."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    g = _rng(seed)
    x = g.uniform(-1.0, 1.0, size=n)
    y = g.uniform(-1.0, 1.0, size=n)
    return np.vstack([x, y, w * (x * x - y * y)])


def wave_cloud(w: float, n: int, seed: int) -> np.ndarray:
    """Exact samples of Z = sin(sin(0.5 w X)) + cos(cos(0.5 w X)), Y ~ U[-1,1] independent."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    g = _rng(seed)
    x = g.uniform(-1.0, 1.0, size=n)
    y = g.uniform(-1.0, 1.0, size=n)
    z = np.sin(np.sin(0.5 * w * x)) + np.cos(np.cos(0.5 * w * x))
    return np.vstack([x, y, z])


def gaussian_blobs(counts, means, sigma, seed: int) -> LabeledCloud:
    """One isotropic Gaussian blob per class, labels attached.

    ``counts`` gives the number of points per class, ``means`` the class
    centers as a (C, p) array-like, ``sigma`` a shared scalar standard
    deviation or one per class.
    """
    counts = [int(c) for c in counts]
    if any(c < 1 for c in counts):
        raise InvalidInputError("every class needs at least one point")
    mu = np.asarray(means, dtype=np.float64)
    if mu.ndim != 2 or mu.shape[0] != len(counts):
        raise InvalidInputError("means must be (C, p) with one row per class")
    sig = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (len(counts),))
    if np.any(sig <= 0):
        raise InvalidInputError("sigma must be positive")
    g = _rng(seed)
    blocks = []
    labels = []
    for cid, (m_c, mean_c, s_c) in enumerate(zip(counts, mu, sig)):
        pts = mean_c[:, None] + s_c * g.standard_normal((mu.shape[1], m_c))
        blocks.append(pts)
        labels.append(np.full(m_c, cid, dtype=np.int64))
    return LabeledCloud(points=np.hstack(blocks), labels=np.concatenate(labels))
