"""Render comparison figures from solver CSV series.

Consumes only the public CSV contract (header ``x,<components>``, one row per
node) plus a small INI plot spec; no solver internals. Two layouts cover the
standard figure families: a difference field with a zoomed panel, and a
profile overlay against a fine reference.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLES = [
    {"color": "tab:blue", "linestyle": "--", "marker": "o", "markersize": 2.5},
    {"color": "tab:red", "linestyle": "-", "marker": "s", "markersize": 2.5},
    {"color": "tab:green", "linestyle": "-.", "marker": "^", "markersize": 2.5},
]


class PlotSpecError(ValueError):
    pass


@dataclass
class PlotSpec:
    """One figure: labelled series, optional reference, component, zoom."""

    series: list  # [(csv path, label), ...]
    component: str
    output: str
    reference: tuple | None = None  # (csv path, label)
    zoom: tuple | None = None  # (x_lo, x_hi)
    title: str = ""
    extra_components: list = field(default_factory=list)

    def __post_init__(self):
        if not self.series:
            raise PlotSpecError("plot spec lists no series")
        for path, _ in list(self.series) + ([self.reference] if self.reference else []):
            if not Path(path).exists():
                raise PlotSpecError(f"series file not found: {path}")


def read_series(path):
    """Read a solver CSV -> (x, {column: array})."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if not header or header[0] != "x":
        raise PlotSpecError(f"{path} is not a series file")
    return data[:, 0], {name: data[:, k + 1] for k, name in enumerate(header[1:])}


def parse_plot_spec(path) -> PlotSpec:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep file paths case-sensitive
    if not parser.read(Path(path)):
        raise PlotSpecError(f"plot spec not found: {path}")
    if not parser.has_section("plot") or not parser.has_section("series"):
        raise PlotSpecError("plot spec needs [plot] and [series] sections")
    plot = parser["plot"]
    known = {"component", "output", "title", "zoom", "reference_path", "reference_label",
             "extra_components"}
    unknown = set(plot) - known
    if unknown:
        raise PlotSpecError(f"unknown plot keys: {sorted(unknown)}")
    zoom = None
    if "zoom" in plot:
        parts = plot["zoom"].replace(",", " ").split()
        if len(parts) != 2:
            raise PlotSpecError(f"zoom needs two numbers, got {plot['zoom']!r}")
        zoom = (float(parts[0]), float(parts[1]))
    reference = None
    if "reference_path" in plot:
        reference = (plot["reference_path"], plot.get("reference_label", "reference"))
    extra = plot.get("extra_components", "").split()
    base = Path(path).parent

    def absolute(p):
        q = Path(p)
        return str(q if q.is_absolute() else base / q)

    series = [(absolute(p), label) for p, label in parser["series"].items()]
    if reference:
        reference = (absolute(reference[0]), reference[1])
    return PlotSpec(
        series=series,
        component=plot.get("component", ""),
        output=absolute(plot.get("output", "figure.png")),
        reference=reference,
        zoom=zoom,
        title=plot.get("title", ""),
        extra_components=extra,
    )


def _column(path, cols, component):
    if component not in cols:
        raise PlotSpecError(
            f"{path} has no column {component!r}; available: {sorted(cols)}"
        )
    return cols[component]


def _draw(axis, spec: PlotSpec, component):
    if spec.reference is not None:
        rx, rcols = read_series(spec.reference[0])
        axis.plot(rx, _column(spec.reference[0], rcols, component),
                  color="0.45", linewidth=1.8, label=spec.reference[1], zorder=1)
    for (path, label), style in zip(spec.series, _STYLES * 4):
        x, cols = read_series(path)
        axis.plot(x, _column(path, cols, component), label=label,
                  linewidth=1.0, markevery=max(1, x.size // 60), zorder=2, **style)
    axis.set_xlabel("x")
    axis.set_ylabel(component)


def render_comparison(spec: PlotSpec) -> Path:
    """Draw all series (plus reference) for one component; optional zoom panel."""
    components = [spec.component] + list(spec.extra_components)
    ncols = len(components) * (2 if spec.zoom else 1)
    fig, axes = plt.subplots(
        1, ncols, figsize=(4.6 * ncols, 3.6), squeeze=False, constrained_layout=True
    )
    k = 0
    for component in components:
        _draw(axes[0, k], spec, component)
        axes[0, k].legend(fontsize=8)
        k += 1
        if spec.zoom:
            _draw(axes[0, k], spec, component)
            axes[0, k].set_xlim(*spec.zoom)
            _autoscale_window(axes[0, k], spec, component)
            axes[0, k].set_title(f"zoom x in [{spec.zoom[0]:g}, {spec.zoom[1]:g}]", fontsize=9)
            k += 1
    if spec.title:
        fig.suptitle(spec.title)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _autoscale_window(axis, spec, component):
    lo, hi = spec.zoom
    lows, highs = [], []
    paths = [p for p, _ in spec.series]
    if spec.reference:
        paths.append(spec.reference[0])
    for path in paths:
        x, cols = read_series(path)
        sel = (x >= lo) & (x <= hi)
        if np.any(sel):
            vals = _column(path, cols, component)[sel]
            lows.append(vals.min())
            highs.append(vals.max())
    if lows:
        span = max(highs) - min(lows)
        span = max(span, 1e-9 * (1.0 + abs(max(highs))))
        axis.set_ylim(min(lows) - 0.08 * span, max(highs) + 0.08 * span)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fluxplots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render a figure from a plot spec")
    p_render.add_argument("--spec", required=True, help="INI plot spec file")
    args = parser.parse_args(argv)
    try:
        out = render_comparison(parse_plot_spec(args.spec))
    except PlotSpecError as exc:
        print(f"plot spec error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
