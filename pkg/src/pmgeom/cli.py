"""Command-line interface.

Exit codes: 0 on success, 2 for I/O or parse problems, 3 for domain or
precondition violations. Errors print a single machine-greppable line to
stderr: ``pmgeom: error: <reason>``.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import experiments as exps
from . import io as pio
from . import plots
from .cloud import ManifoldSet
from .curvature import mean_gauss_curvature
from .errors import PmgeomError
from .regularization import LossSchedule, combined_loss, curvature_penalties, l_curvature
from .trainer import TrainConfig, train
from .volume import manifold_volume, separation_all, separation_degree_closed_form

EXIT_IO = 2
EXIT_DOMAIN = 3


def _fail(code: int, message: str):
    click.echo(f"pmgeom: error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (OSError, pio.FormatError, json.JSONDecodeError) as exc:
            _fail(EXIT_IO, str(exc))
        except PmgeomError as exc:
            _fail(EXIT_DOMAIN, str(exc))

    return wrapper


@click.group()
def main():
    """Point-cloud manifold geometry toolkit."""


@main.command()
@click.option("--input", "path", required=True, help="cloud file (.csv or PMGM binary)")
@click.option("--class", "class_id", type=int, default=None, help="restrict to one class")
@click.option("--no-center", is_flag=True, help="skip mean-centering the covariance")
@handle_errors
def volume(path, class_id, no_center):
    """Volume of each class manifold in a cloud file."""
    cloud = pio.read_cloud(path)
    ms = ManifoldSet.from_labeled_cloud(cloud)
    center = not no_center
    ids = [class_id] if class_id is not None else list(ms.class_ids)
    vols = {str(cid): manifold_volume(ms.matrix_for(cid), center=center) for cid in ids}
    out = {"centered": center, "volumes": vols}
    if class_id is None:
        out["total_volume"] = manifold_volume(ms.stacked(), center=center)
    click.echo(pio.dump_json(out))


@main.command()
@click.option("--input", "path", required=True, help="cloud file (.csv or PMGM binary)")
@click.option("--closed-form", is_flag=True, help="use the closed-form evaluation")
@click.option("--centered", is_flag=True, help="use centered (translation-invariant) volumes")
@handle_errors
def separation(path, closed_form, centered):
    """One-vs-rest separation degree of every class."""
    cloud = pio.read_cloud(path)
    ms = ManifoldSet.from_labeled_cloud(cloud)
    if closed_form and centered:
        _fail(EXIT_DOMAIN, "closed form is defined for uncentered volumes only")
    if closed_form:
        sep = {str(c): separation_degree_closed_form(ms, c) for c in ms.class_ids}
        rep = separation_all(ms, center=False)
    else:
        rep = separation_all(ms, center=centered)
        sep = {str(c): s for c, s in zip(rep.class_ids, rep.separation)}
    click.echo(
        pio.dump_json(
            {
                "centered": rep.centered,
                "closed_form": bool(closed_form),
                "separation": sep,
                "class_volumes": {str(c): v for c, v in zip(rep.class_ids, rep.class_volumes)},
                "total_volume": rep.total_volume,
            }
        )
    )


@main.command()
@click.option("--input", "path", required=True, help="cloud file (.csv or PMGM binary)")
@click.option("--k", type=int, default=40, show_default=True, help="neighbors per point")
@click.option("--rank-tol", type=float, default=1e-8, show_default=True)
@click.option("--ridge", type=float, default=1e-10, show_default=True)
@handle_errors
def curvature(path, k, rank_tol, ridge):
    """Gauss-curvature report for each class manifold."""
    cloud = pio.read_cloud(path)
    ms = ManifoldSet.from_labeled_cloud(cloud)
    out = {}
    for cid, mat in zip(ms.class_ids, ms.matrices):
        rep = mean_gauss_curvature(mat, k=k, rank_tol=rank_tol, ridge=ridge)
        out[str(cid)] = {
            "complexity": rep.complexity,
            "signed_mean": rep.signed_mean,
            "n_points": int(mat.shape[1]),
            "n_skipped": rep.n_skipped,
            "tangent_dims": rep.tangent_dims,
            "curvatures": rep.curvatures,
        }
    click.echo(pio.dump_json({"k": k, "classes": out}))


@main.command()
@click.option("--curvatures", "curv", required=True,
              help="JSON array of per-class curvatures, inline or a file path")
@click.option("--epoch", type=int, required=True)
@click.option("--tau", type=float, required=True)
@click.option("--l-original", type=float, required=True)
@handle_errors
def crloss(curv, epoch, tau, l_original):
    """Curvature penalties and the schedule-weighted combined loss."""
    text = curv
    if not curv.lstrip().startswith("["):
        with open(curv) as fh:
            text = fh.read()
    g = json.loads(text)
    pen = curvature_penalties(g)
    lc = l_curvature(g)
    total, weight = combined_loss(l_original, lc, LossSchedule(tau=tau, epoch=epoch))
    click.echo(
        pio.dump_json(
            {"penalties": pen, "l_curvature": lc, "weight": weight, "total": total}
        )
    )


@main.command()
@click.argument("name", type=click.Choice(exps.EXPERIMENTS))
@click.option("--out", type=click.Path(), default=None, help="output CSV path")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", type=int, default=2000, show_default=True,
              help="points per cloud (fig2/fig3)")
@click.option("--steps", type=int, default=21, show_default=True,
              help="distance grid size (fig2)")
@click.option("--mode", type=click.Choice(["ce", "ce+cr"]), default="ce",
              show_default=True, help="training mode (dynamics)")
@click.option("--plot/--no-plot", "render", default=True, show_default=True,
              help="render the matching figure next to the CSV")
@handle_errors
def experiment(name, out, seed, n, steps, mode, render):
    """Run a canned experiment; writes a CSV curve file (and a PNG figure)."""
    out = Path(out) if out else Path(f"{name.replace('-', '_')}.csv")
    if name == "fig2":
        fields, rows = exps.fig2_sweep(seed=seed, n=n, steps=steps)
        pio.write_rows_csv(out, fields, rows)
        if render:
            plots.plot_fig2(rows, out.with_suffix(".png"))
    elif name == "fig3":
        fields, rows = exps.fig3_sweep(seed=seed, n=n)
        pio.write_rows_csv(out, fields, rows)
        if render:
            plots.plot_fig3(rows, out.with_suffix(".png"))
    elif name == "tau-sweep":
        fields, rows = exps.tau_sweep(seed=seed)
        pio.write_rows_csv(out, fields, rows)
        if render:
            plots.plot_tau(rows, out.with_suffix(".png"))
    else:  # dynamics
        trace, summary = exps.dynamics_run(seed=seed, mode=mode)
        pio.write_trace_csv(out, trace)
        pio.dump_json(summary, out.with_name(out.stem + "_summary.json"))
        if render:
            plots.plot_trace(trace, out.with_suffix(".png"))
    click.echo(str(out))


@main.command(name="train")
@click.option("--config", "config_path", required=True, type=click.Path(),
              help="JSON file of TrainConfig fields")
@click.option("--out-trace", type=click.Path(), default="trace.csv", show_default=True)
@click.option("--out-summary", type=click.Path(), default="summary.json", show_default=True)
@click.option("--plot/--no-plot", "render", default=True, show_default=True)
@handle_errors
def train_cmd(config_path, out_trace, out_summary, render):
    """Train the toy classifier from a JSON config; writes trace CSV + summary JSON."""
    with open(config_path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise pio.FormatError("config must be a JSON object")
    try:
        for key in ("class_counts", "hidden"):
            if key in raw:
                raw[key] = tuple(raw[key])
        if "means" in raw:
            raw["means"] = tuple(tuple(m) for m in raw["means"])
        cfg = TrainConfig(**raw)
    except (TypeError, PmgeomError) as exc:
        raise pio.FormatError(f"bad config: {exc}") from exc
    trace = train(cfg)
    pio.write_trace_csv(out_trace, trace)
    summary = exps.trace_summary(trace, cfg.mode)
    pio.dump_json(summary, out_summary)
    if render:
        plots.plot_trace(trace, Path(out_trace).with_suffix(".png"))
    click.echo(out_trace)


if __name__ == "__main__":
    main()
