"""Matplotlib rendering of the experiment CSVs.

Each plotting function takes the rows an experiment runner produced and
writes a PNG next to the delimited output. Rendering is headless (Agg)
and purely cosmetic: the CSV stays the canonical artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_fig2(rows, path) -> None:
    """Separation vs center distance, one panel per sphere pair."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
    for ax, pair in zip(axes, ("equal", "mixed")):
        sel = [r for r in rows if r["pair"] == pair]
        d = np.array([r["d"] for r in sel])
        ra, rb = sel[0]["radius_a"], sel[0]["radius_b"]
        ax.plot(d, [r["sep_a_centered"] for r in sel], "o-", ms=3,
                label=f"r={ra} (centered)")
        ax.plot(d, [r["sep_b_centered"] for r in sel], "s--", ms=3,
                label=f"r={rb} (centered)")
        ax.plot(d, [r["sep_a_uncentered"] for r in sel], ":", color="gray",
                label=f"r={ra} (uncentered)")
        ax.plot(d, [r["sep_b_uncentered"] for r in sel], "-.", color="black",
                label=f"r={rb} (uncentered)")
        ax.set_xlabel("center distance")
        ax.set_title(f"radii {ra} / {rb}")
        ax.legend(fontsize=7)
    axes[0].set_ylabel("separation degree")
    _save(fig, path)


def plot_fig3(rows, path) -> None:
    """Complexity vs w, one panel per surface, one curve per k."""
    surfaces = sorted({r["surface"] for r in rows})
    fig, axes = plt.subplots(1, len(surfaces), figsize=(4.5 * len(surfaces), 3.6))
    axes = np.atleast_1d(axes)
    for ax, surface in zip(axes, surfaces):
        sel = [r for r in rows if r["surface"] == surface]
        for k in sorted({r["k"] for r in sel}):
            pts = sorted((r["w"], r["complexity"]) for r in sel if r["k"] == k)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3, label=f"k={k}")
        ax.set_xlabel("w")
        ax.set_ylabel("complexity (mean |G|)")
        ax.set_title(surface)
        ax.legend(fontsize=7)
    _save(fig, path)


def plot_tau(rows, path) -> None:
    fig, ax1 = plt.subplots(figsize=(5.5, 3.6))
    taus = [r["tau"] for r in rows]
    ax1.plot(taus, [r["final_mean_accuracy"] for r in rows], "o-", color="tab:blue",
             label="mean accuracy")
    ax1.set_xlabel("tau")
    ax1.set_ylabel("final mean accuracy", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(taus, [r["accuracy_variance"] for r in rows], "s--", color="tab:red",
             label="accuracy variance")
    ax2.set_ylabel("accuracy variance", color="tab:red")
    _save(fig, path)


def plot_trace(trace, path) -> None:
    """Loss, per-class accuracy, and the geometry trends of one training run."""
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.4))
    e = trace.epochs
    axes[0, 0].plot(e, trace.mean_loss)
    axes[0, 0].set_title("mean loss")
    for c in range(trace.n_classes):
        axes[0, 1].plot(e, trace.accuracy[:, c], label=f"class {c}")
        axes[1, 0].plot(e, trace.separation[:, c], label=f"class {c}")
        axes[1, 1].plot(e, trace.complexity[:, c], label=f"class {c}")
    axes[0, 1].set_title("held-out accuracy")
    axes[1, 0].set_title("separation degree")
    axes[1, 1].set_title("complexity")
    for ax in axes.flat:
        ax.set_xlabel("epoch")
    axes[0, 1].legend(fontsize=7)
    _save(fig, path)
