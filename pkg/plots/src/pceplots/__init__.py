"""Figure rendering for experiment CSV outputs.

Consumes only the CSV files written by the experiment runner (never its
in-process API) and emits deterministic SVG figures: pdf overlays,
quantile-fan time plots, and error-decay curves.
"""

from .render import PlotSpec, load_spec, render

__version__ = "0.1.0"

__all__ = ["PlotSpec", "load_spec", "render"]
