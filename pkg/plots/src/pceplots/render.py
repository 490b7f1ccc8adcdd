"""Render experiment CSVs into deterministic SVG figures.

Three plot kinds, one per result-file schema:

    pdf-overlay   posterior_pdf.csv   labeled density curves on the grid
    quantile-fan  history.csv         q05-q95 / q25-q75 bands + median line
    error-decay   error.csv (1..n)    log-scale RMSE against update step

A render is a pure function of the input CSVs: the theme is fixed by the
shipped style file, the SVG hash salt is pinned, and no date metadata is
written, so re-rendering produces identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_THEME = Path(__file__).with_name("theme.mplstyle")
_HASHSALT = "pceplots"

KINDS = ("pdf-overlay", "quantile-fan", "error-decay")

EXIT_OK = 0
EXIT_SPEC = 2

# band/line colors per quantile-fan component, cycled
_FAN_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


class SpecError(ValueError):
    """Bad plot spec or inputs that do not match it."""


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[Path, ...]
    output: Path
    columns: tuple[str, ...] = ()
    labels: tuple[str, ...] = ()
    components: tuple[int, ...] = ()
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise SpecError("at least one input CSV is required")
        if self.output.suffix != ".svg":
            raise SpecError("output must be an .svg path")


def load_spec(path: str | Path) -> PlotSpec:
    path = Path(path)
    if not path.exists():
        raise SpecError(f"spec file {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}: "
                        f"{exc.msg}") from exc
    known = {"kind", "inputs", "output", "columns", "labels", "components",
             "title"}
    unknown = set(raw) - known
    if unknown:
        raise SpecError(f"unknown spec keys: {sorted(unknown)}")
    for required in ("kind", "inputs", "output"):
        if required not in raw:
            raise SpecError(f"spec is missing '{required}'")
    base = path.parent
    return PlotSpec(
        kind=raw["kind"],
        inputs=tuple((base / p).resolve() if not Path(p).is_absolute()
                     else Path(p) for p in raw["inputs"]),
        output=(base / raw["output"]).resolve()
               if not Path(raw["output"]).is_absolute() else Path(raw["output"]),
        columns=tuple(raw.get("columns", ())),
        labels=tuple(raw.get("labels", ())),
        components=tuple(raw.get("components", ())),
        title=raw.get("title", ""),
    )


def read_table(path: Path) -> tuple[list[str], np.ndarray]:
    if not path.exists():
        raise SpecError(f"input file {path} does not exist")
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    columns = lines[0].split(",")
    try:
        data = np.array([[float(v) for v in ln.split(",")]
                         for ln in lines[1:]])
    except ValueError as exc:
        raise SpecError(f"{path}: non-numeric cell: {exc}") from exc
    return columns, data


def _column(columns: list[str], data: np.ndarray, name: str,
            path: Path) -> np.ndarray:
    if name not in columns:
        raise SpecError(f"{path}: column {name!r} not found "
                        f"(have {columns})")
    return data[:, columns.index(name)]


def _render_pdf_overlay(spec: PlotSpec, ax) -> None:
    path = spec.inputs[0]
    columns, data = read_table(path)
    grid = _column(columns, data, "grid", path)
    names = list(spec.columns) if spec.columns else \
        [c for c in columns if c != "grid"]
    if len(names) < 2:
        raise SpecError("pdf-overlay needs at least two density columns")
    labels = spec.labels if len(spec.labels) == len(names) else names
    for name, label in zip(names, labels):
        ax.plot(grid, _column(columns, data, name, path), label=label)
    ax.set_xlabel("value")
    ax.set_ylabel("density")
    ax.legend()


def _render_quantile_fan(spec: PlotSpec, ax) -> None:
    path = spec.inputs[0]
    columns, data = read_table(path)
    time = _column(columns, data, "time", path)
    comps = list(spec.components) if spec.components else sorted(
        int(c.split("_")[1]) for c in columns if c.startswith("q50_"))
    if not comps:
        raise SpecError(f"{path}: no quantile columns found")
    for idx, comp in enumerate(comps):
        color = _FAN_COLORS[idx % len(_FAN_COLORS)]
        q = {level: _column(columns, data, f"q{level:02d}_{comp}", path)
             for level in (5, 25, 50, 75, 95)}
        ax.fill_between(time, q[5], q[95], alpha=0.15, color=color, lw=0)
        ax.fill_between(time, q[25], q[75], alpha=0.30, color=color, lw=0)
        ax.plot(time, q[50], color=color, label=f"component {comp}")
    ax.set_xlabel("time")
    ax.set_ylabel("state")
    ax.legend()


def _render_error_decay(spec: PlotSpec, ax) -> None:
    labels = spec.labels if len(spec.labels) == len(spec.inputs) else \
        [p.parent.name or p.stem for p in spec.inputs]
    for path, label in zip(spec.inputs, labels):
        columns, data = read_table(path)
        step = _column(columns, data, "step", path)
        rmse = _column(columns, data, "rmse", path)
        ax.semilogy(step, rmse, marker="o", markersize=3, label=label)
    ax.set_xlabel("update step")
    ax.set_ylabel("rmse")
    ax.legend()


_RENDERERS = {
    "pdf-overlay": _render_pdf_overlay,
    "quantile-fan": _render_quantile_fan,
    "error-decay": _render_error_decay,
}


def render(spec: PlotSpec) -> Path:
    """Render the spec to its SVG output path and return that path."""
    with plt.style.context(str(_THEME)):
        plt.rcParams["svg.hashsalt"] = _HASHSALT
        fig, ax = plt.subplots()
        try:
            _RENDERERS[spec.kind](spec, ax)
            if spec.title:
                ax.set_title(spec.title)
            spec.output.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(spec.output, format="svg",
                        metadata={"Date": None})
        finally:
            plt.close(fig)
    return spec.output


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pceplots", description="Render experiment CSVs to SVG figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render a plot spec file")
    p_render.add_argument("spec")
    args = parser.parse_args(argv)
    try:
        out = render(load_spec(args.spec))
        print(f"figure written: {out}")
        return EXIT_OK
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
