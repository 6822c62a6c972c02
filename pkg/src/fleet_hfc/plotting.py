"""SVG figures for solved scenarios and Monte Carlo batteries.

Figures are built on bare :class:`~matplotlib.figure.Figure` objects (no
pyplot state) and written with a fixed hash salt and no date stamp, so the
same input always produces the same bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .environment import FieldModel, TaskSpot, density_grid

__all__ = ["emit_plots", "plot_field", "plot_routes", "plot_history", "plot_montecarlo"]

_STYLE = {
    "svg.hashsalt": "fleet-hfc",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
_COLORS = ["tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown",
           "tab:pink", "tab:olive"]


def _save(fig: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _field_axes(ax, fm: FieldModel) -> None:
    xs, ys, grid = density_grid(fm)
    cs = ax.contourf(xs, ys, grid, levels=10, cmap="Greys", alpha=0.6)
    if fm.coastline_mask.any():
        ax.contourf(xs, ys, fm.coastline_mask.astype(float), levels=[0.5, 1.5], colors=["tan"])
    ax.figure.colorbar(cs, ax=ax, label="COTS density")
    ax.set_xlim(0, fm.width_m)
    ax.set_ylim(0, fm.height_m)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")


def plot_field(fm: FieldModel, tasks: Sequence[TaskSpot], path: str | Path) -> Path:
    with matplotlib.rc_context(_STYLE):
        fig = Figure(figsize=(6, 5))
        ax = fig.add_subplot()
        _field_axes(ax, fm)
        if tasks:
            pts = np.array([t.position_xyz[:2] for t in tasks])
            ax.scatter(pts[:, 0], pts[:, 1], s=10, c="k", label="task spots")
            ax.legend(loc="upper right")
        ax.set_title(f"{len(tasks)} task spots")
    return _save(fig, Path(path))


def plot_routes(result, path: str | Path) -> Path:
    """Route overlay on the density contour, one colour per vehicle/cluster."""
    fm = result.field_model
    table = {t.id: t for t in result.tasks}
    with matplotlib.rc_context(_STYLE):
        fig = Figure(figsize=(6, 5))
        ax = fig.add_subplot()
        _field_axes(ax, fm)
        for i, r in enumerate(result.plan.routes):
            color = _COLORS[i % len(_COLORS)]
            pts = [r.start_xyz] + [table[t].position_xyz for t in r.task_ids] + [r.goal_xyz]
            xy = np.array([p[:2] for p in pts])
            ax.plot(xy[:, 0], xy[:, 1], "-", color=color, lw=1.2,
                    label=f"vehicle {r.vehicle_id} ({len(r.task_ids)})")
            ax.scatter(xy[1:-1, 0], xy[1:-1, 1], s=14, color=color, zorder=3)
        if result.plan.abandoned:
            ab = np.array([table[t].position_xyz[:2] for t in sorted(result.plan.abandoned)])
            ax.scatter(ab[:, 0], ab[:, 1], s=14, facecolors="none", edgecolors="k",
                       label="abandoned", zorder=3)
        r0 = result.plan.routes[0]
        ax.scatter(*r0.start_xyz[:2], marker="s", s=60, c="k", label="start", zorder=4)
        ax.scatter(*r0.goal_xyz[:2], marker="*", s=120, c="gold", edgecolors="k",
                   label="rendezvous", zorder=4)
        ax.legend(loc="upper right", fontsize=7)
        ax.set_title(f"{result.label}: {result.completed}/{len(result.tasks)} tasks")
    return _save(fig, Path(path))


def plot_history(history, path: str | Path, title: str = "") -> Path:
    """Cost, violation and time difference of the best plan per iteration."""
    by_v: dict[int, list] = {}
    for h in history:
        by_v.setdefault(h.vehicle, []).append(h)
    with matplotlib.rc_context(_STYLE):
        fig = Figure(figsize=(6, 7))
        axes = fig.subplots(3, 1, sharex=True)
        for i, (vid, rows) in enumerate(sorted(by_v.items())):
            it = [h.iter for h in rows]
            color = _COLORS[i % len(_COLORS)]
            axes[0].plot(it, [h.cost for h in rows], color=color, label=f"vehicle {vid}")
            axes[1].plot(it, [h.violation_s for h in rows], color=color)
            axes[2].plot(it, [h.t_diff_s for h in rows], color=color)
        axes[0].set_yscale("log")
        axes[0].set_ylabel("cost")
        axes[1].set_ylabel("violation (s)")
        axes[2].set_ylabel("time difference (s)")
        axes[2].axhline(0.0, color="k", lw=0.8)
        axes[2].set_xlabel("iteration")
        axes[0].legend(fontsize=7)
        if title:
            axes[0].set_title(title)
        fig.tight_layout()
    return _save(fig, Path(path))


def plot_montecarlo(rows: Sequence[dict], path: str | Path) -> Path:
    """Per-vehicle boxplots of cost, operation time and completed tasks.

    ``rows`` follow the per-run CSV schema.
    """
    vehicles = sorted({int(r["vehicle"]) for r in rows})
    metrics = [("cost", "cost"), ("mission_time_s", "operation time (s)"),
               ("completed", "completed tasks"), ("violation_s", "violation (s)")]
    with matplotlib.rc_context(_STYLE):
        fig = Figure(figsize=(8, 6))
        axes = fig.subplots(2, 2).ravel()
        for ax, (key, label) in zip(axes, metrics):
            data = [[float(r[key]) for r in rows if int(r["vehicle"]) == v] for v in vehicles]
            ax.boxplot(data, tick_labels=[f"V{v}" for v in vehicles])
            ax.set_ylabel(label)
        runs = len({r["run"] for r in rows})
        fig.suptitle(f"Monte Carlo, {runs} runs")
        fig.tight_layout()
    return _save(fig, Path(path))


def emit_plots(results: Sequence, out_dir: str | Path, prefix: str = "") -> list[Path]:
    """Route overlay and history charts per result; boxplots for batteries.

    A single-scenario call gets one overlay and one history figure per
    result. When ``results`` holds several runs of the same mode (a Monte
    Carlo battery) only the first run's figures are drawn, plus boxplots.
    """
    if not results:
        raise ValueError("no results to plot")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = [r.label for r in results]
    battery = len(results) > 1 and len(set(labels)) == 1
    written = []
    for i, res in enumerate(results[:1] if battery else results):
        tag = f"{prefix}{res.label}"
        if res.field_model is not None:
            written.append(plot_routes(res, out / f"{tag}_routes.svg"))
        written.append(plot_history(res.history, out / f"{tag}_history.svg",
                                    f"{res.label}, seed {res.config.seed}"))
    if battery:
        from .harness import run_rows

        written.append(plot_montecarlo(run_rows(results), out / f"{prefix}montecarlo_boxplots.svg"))
    return written
