"""Render pivotfield CSV outputs into figures.

Strictly a consumer of the CSV contracts written by the simulation CLI:

* map CSV: ``node_index,r_m,theta_rad,value`` (one z-layer)
* metric CSV: ``time_s,rmse``
* trajectory CSV: ``time_s,node_0,...,node_{N-1}``
* observability CSV: ``node_index,r_m,theta_rad,z_m,o_avg``

No numeric values are recomputed or resampled; the renderer only draws what
the files contain. Figures are rasterized deterministically (Agg, fixed
size/dpi) so identical inputs produce identical image bytes.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["PlotSpec", "render", "main"]

KINDS = ("polar-map", "timeseries", "error-trajectory", "observability")


class MalformedCsv(ValueError):
    pass


@dataclass
class PlotSpec:
    kind: str
    inputs: list
    output: Path
    labels: list = field(default_factory=list)
    nodes: list = field(default_factory=list)  # node selectors for timeseries
    title: str | None = None
    color_limits: tuple | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)
        missing = [str(p) for p in self.inputs if not p.exists()]
        if missing:
            raise FileNotFoundError(f"missing input files: {missing}")
        if not self.labels:
            self.labels = [p.parent.name or p.stem for p in self.inputs]


def _read_columns(path: Path, expected: tuple) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: empty file") from None
        for col in expected:
            if col not in header:
                raise MalformedCsv(f"{path}: missing column {col!r}")
        out = {col: [] for col in header}
        for i, row in enumerate(reader):
            if len(row) != len(header):
                raise MalformedCsv(f"{path}: row {i + 2} has {len(row)} fields")
            for col, value in zip(header, row):
                try:
                    out[col].append(float(value))
                except ValueError:
                    raise MalformedCsv(
                        f"{path}: row {i + 2}, column {col!r}: {value!r} is not numeric"
                    ) from None
    return {col: np.asarray(vals) for col, vals in out.items()}


def _new_figure(width=6.4, height=4.8):
    fig = Figure(figsize=(width, height), dpi=120)
    FigureCanvasAgg(fig)
    return fig


def _save(fig: Figure, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", metadata={"Software": "fieldplots"})


def _render_polar_map(spec: PlotSpec) -> None:
    data = _read_columns(spec.inputs[0], ("node_index", "r_m", "theta_rad", "value"))
    r = data["r_m"]
    th = data["theta_rad"]
    values = data["value"]
    r_centers = np.unique(r)
    th_centers = np.unique(th)
    grid = np.full((th_centers.size, r_centers.size), np.nan)
    ri = np.searchsorted(r_centers, r)
    ti = np.searchsorted(th_centers, th)
    grid[ti, ri] = values
    if np.any(np.isnan(grid)):
        raise MalformedCsv(f"{spec.inputs[0]}: nodes do not fill an (r, theta) lattice")

    # cell edges from the uniform center layout
    dr = r_centers[1] - r_centers[0] if r_centers.size > 1 else 2 * r_centers[0]
    dth = th_centers[1] - th_centers[0] if th_centers.size > 1 else 2 * np.pi
    r_edges = np.concatenate([r_centers - dr / 2, [r_centers[-1] + dr / 2]])
    th_edges = np.concatenate([th_centers - dth / 2, [th_centers[-1] + dth / 2]])

    fig = _new_figure(5.6, 5.2)
    ax = fig.add_subplot(projection="polar")
    vmin, vmax = (
        spec.color_limits
        if spec.color_limits
        else (float(values.min()), float(values.max()))
    )
    if vmin == vmax:
        vmin, vmax = vmin - 0.5, vmax + 0.5  # uniform field: single-color map
    mesh = ax.pcolormesh(
        th_edges, r_edges, grid.T, vmin=vmin, vmax=vmax, cmap="viridis", shading="flat"
    )
    ax.set_yticklabels([])
    ax.set_xticklabels([])
    ax.grid(False)
    fig.colorbar(mesh, ax=ax, shrink=0.8)
    ax.set_title(spec.title or spec.inputs[0].stem)
    _save(fig, spec.output)


def _render_error_trajectory(spec: PlotSpec) -> None:
    fig = _new_figure()
    ax = fig.add_subplot()
    for path, label in zip(spec.inputs, spec.labels):
        data = _read_columns(path, ("time_s", "rmse"))
        ax.plot(data["time_s"] / 86400.0, data["rmse"], label=label)
    ax.set_xlabel("time (days)")
    ax.set_ylabel("RMSE")
    ax.set_title(spec.title or "estimation error")
    ax.grid(True, alpha=0.3)
    ax.legend()
    _save(fig, spec.output)


def _render_timeseries(spec: PlotSpec) -> None:
    if not spec.nodes:
        raise ValueError("timeseries plots need at least one node selector")
    fig = _new_figure()
    ax = fig.add_subplot()
    styles = ["-", "--", "-.", ":"]
    for (path, label), style in zip(zip(spec.inputs, spec.labels), styles):
        data = _read_columns(path, ("time_s",))
        for node in spec.nodes:
            col = f"node_{node}"
            if col not in data:
                raise MalformedCsv(f"{path}: missing column {col!r}")
            ax.plot(
                data["time_s"] / 86400.0,
                data[col],
                style,
                label=f"{label} node {node}",
            )
    ax.set_xlabel("time (days)")
    ax.set_ylabel("pressure head (m)")
    ax.set_title(spec.title or "state trajectories")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, spec.output)


def _render_observability(spec: PlotSpec) -> None:
    data = _read_columns(spec.inputs[0], ("node_index", "o_avg"))
    fig = _new_figure(7.2, 4.2)
    ax = fig.add_subplot()
    ax.bar(data["node_index"], data["o_avg"], width=1.0)
    ax.set_xlabel("node index")
    ax.set_ylabel("average modal degree of observability")
    ax.set_title(spec.title or "observability ranking")
    _save(fig, spec.output)


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the written image path."""
    handler = {
        "polar-map": _render_polar_map,
        "timeseries": _render_timeseries,
        "error-trajectory": _render_error_trajectory,
        "observability": _render_observability,
    }[spec.kind]
    handler(spec)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fieldplots", description="render pivotfield CSV outputs"
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--input", action="append", required=True, dest="inputs")
    parser.add_argument("--out", required=True)
    parser.add_argument("--label", action="append", default=None, dest="labels")
    parser.add_argument(
        "--node", action="append", type=int, default=None, dest="nodes"
    )
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec(
            kind=args.kind,
            inputs=args.inputs,
            output=args.out,
            labels=args.labels or [],
            nodes=args.nodes or [],
            title=args.title,
        )
        render(spec)
    except (MalformedCsv, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
