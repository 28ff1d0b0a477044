"""Experiment runners producing the CSV curves behind the report figures.

Each runner returns (fieldnames, rows); the CLI writes the rows as CSV
and renders the matching figure next to it. Runners are deterministic in
their seed, so a fixed seed reproduces the CSV byte for byte. Sweep
points are evaluated through a thread pool capped by the
MANIFOLD_GEOM_THREADS environment variable (0 or unset = one worker per
CPU); results are collected in sweep order regardless of worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .cloud import ManifoldSet
from .curvature import mean_gauss_curvature
from .regularization import class_complexities
from .stats import spearman
from .synthetic import saddle_cloud, sphere_cloud, wave_cloud
from .trainer import TrainConfig, train
from .volume import separation_all

FIG2_FIELDS = [
    "pair",
    "radius_a",
    "radius_b",
    "d",
    "sep_a_centered",
    "sep_b_centered",
    "sep_a_uncentered",
    "sep_b_uncentered",
]

FIG3_FIELDS = ["surface", "w", "k", "complexity", "signed_mean", "n_skipped"]

TAU_FIELDS = [
    "tau",
    "final_mean_accuracy",
    "accuracy_variance",
    "bias_ratio",
    "curvature_variance",
]


def worker_count() -> int:
    raw = os.environ.get("MANIFOLD_GEOM_THREADS", "0")
    try:
        v = int(raw)
    except ValueError:
        v = 0
    return v if v > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items):
    items = list(items)
    w = min(worker_count(), len(items))
    if w <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


def fig2_sweep(seed: int = 0, n: int = 2000, steps: int = 21, d_max: float = 10.0,
               mode: str = "surface"):
    """Separation of two sphere clouds vs center distance.

    Pairs: equal radii (1, 1) and mixed (1, 1.5). The same base clouds are
    translated apart symmetrically (+-d/2 along x), so each curve varies
    only through the distance. For the equal pair the second cloud is the
    point reflection of the first, which makes the two separation degrees
    symmetric by construction, matching the population symmetry without
    sampling noise. Both centered and uncentered separation are reported:
    centered is translation invariant and gives the rising curves, while
    the uncentered form is the one whose subadditivity theorem guarantees
    the larger-radius manifold always separates more.
    """
    ss = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(2)]
    offsets = np.linspace(0.0, d_max, steps)

    pairs = []
    base_a = sphere_cloud(1.0, (0.0, 0.0, 0.0), n, seed=seeds[0], mode=mode)
    pairs.append(("equal", 1.0, 1.0, base_a, -base_a))
    base_b = sphere_cloud(1.5, (0.0, 0.0, 0.0), n, seed=seeds[1], mode=mode)
    pairs.append(("mixed", 1.0, 1.5, base_a, base_b))

    def one(job):
        name, ra, rb, ca, cb, d = job
        shift = np.array([[d / 2.0], [0.0], [0.0]])
        ms = ManifoldSet(matrices=(ca - shift, cb + shift), class_ids=(0, 1))
        cen = separation_all(ms, center=True).separation
        unc = separation_all(ms, center=False).separation
        return {
            "pair": name,
            "radius_a": ra,
            "radius_b": rb,
            "d": float(d),
            "sep_a_centered": cen[0],
            "sep_b_centered": cen[1],
            "sep_a_uncentered": unc[0],
            "sep_b_uncentered": unc[1],
        }

    jobs = [
        (name, ra, rb, ca, cb, d)
        for name, ra, rb, ca, cb in pairs
        for d in offsets
    ]
    return FIG2_FIELDS, parallel_map(one, jobs)


def fig3_sweep(seed: int = 0, n: int = 2000, ws=(0.5, 1.0, 1.5, 2.0),
               ks=(10, 20, 40, 60)):
    """Manifold complexity of saddle and wave surfaces vs steepness w, per k.

    The base (X, Y) samples are fixed per surface (they depend only on
    the seed), so the w sweep changes the surface, not the sampling.
    """
    ss = np.random.SeedSequence(seed)
    seeds = {name: int(s.generate_state(1)[0]) for name, s in zip(("saddle", "wave"), ss.spawn(2))}

    def one(job):
        surface, w, k = job
        cloud = (saddle_cloud if surface == "saddle" else wave_cloud)(w, n, seeds[surface])
        rep = mean_gauss_curvature(cloud, k=k)
        return {
            "surface": surface,
            "w": float(w),
            "k": int(k),
            "complexity": rep.complexity,
            "signed_mean": rep.signed_mean,
            "n_skipped": rep.n_skipped,
        }

    jobs = [(s, w, k) for s in ("saddle", "wave") for w in ws for k in ks]
    return FIG3_FIELDS, parallel_map(one, jobs)


def tau_sweep(seed: int = 0, taus=(10.0, 50.0, 100.0, 150.0)):
    """End-of-training bias metrics of the toy trainer across tau values."""

    def one(tau):
        cfg = TrainConfig(
            class_counts=(120, 80, 40),
            epochs=25,
            mode="ce+cr",
            tau=float(tau),
            seed=seed,
        )
        trace = train(cfg)
        comp = trace.complexity[-1]
        return {
            "tau": float(tau),
            "final_mean_accuracy": float(trace.accuracy[-1].mean()),
            "accuracy_variance": float(trace.accuracy_variance[-1]),
            "bias_ratio": float(trace.bias_ratio[-1]),
            "curvature_variance": float(np.var(comp[np.isfinite(comp)])),
        }

    return TAU_FIELDS, [one(t) for t in taus]


def trace_summary(trace, mode: str) -> dict:
    """Trend flags and end-of-training metrics for a trace."""
    epochs = trace.epochs.astype(float)
    mean_sep = trace.separation.mean(axis=1)
    comp = np.where(np.isfinite(trace.complexity), trace.complexity, np.nan)
    mean_comp = np.nanmean(comp, axis=1)
    sep_rho = _safe_spearman(epochs, mean_sep)
    comp_rho = _safe_spearman(epochs, mean_comp)
    final_comp = trace.complexity[-1]
    return {
        "mode": mode,
        "epochs": int(trace.epochs[-1]),
        "final_mean_accuracy": float(trace.accuracy[-1].mean()),
        "final_accuracy_variance": float(trace.accuracy_variance[-1]),
        "final_bias_ratio": float(trace.bias_ratio[-1]),
        "final_curvature_variance": float(np.var(final_comp[np.isfinite(final_comp)])),
        "separation_trend_spearman": sep_rho,
        "rising_separation": bool(sep_rho >= 0.8) if np.isfinite(sep_rho) else False,
        "complexity_trend_spearman": comp_rho,
        "falling_complexity": bool(comp_rho <= -0.5) if np.isfinite(comp_rho) else False,
    }


def _safe_spearman(x, y) -> float:
    mask = np.isfinite(np.asarray(x)) & np.isfinite(np.asarray(y))
    if mask.sum() < 2:
        return float("nan")
    try:
        return spearman(np.asarray(x)[mask], np.asarray(y)[mask])
    except Exception:
        return float("nan")


def dynamics_run(seed: int = 0, mode: str = "ce"):
    """One default-benchmark training run; returns (trace, summary dict)."""
    cfg = TrainConfig(seed=seed, mode=mode)
    trace = train(cfg)
    return trace, trace_summary(trace, mode)


# keep an importable registry so the CLI and tests agree on names
EXPERIMENTS = ("fig2", "fig3", "tau-sweep", "dynamics")
