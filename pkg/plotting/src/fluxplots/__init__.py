"""Figure rendering for solver CSV series."""

__version__ = "0.1.0"

from .render import PlotSpec, PlotSpecError, parse_plot_spec, read_series, render_comparison

__all__ = [
    "PlotSpec",
    "PlotSpecError",
    "parse_plot_spec",
    "read_series",
    "render_comparison",
    "__version__",
]
