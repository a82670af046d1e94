"""Render a figure recipe: CSV columns -> static image + provenance JSON.

The provenance file next to each image records the sha256 of every
input, the exact data series drawn (after x-rescaling and reduction),
and the guide-line parameters. Rerendering from the same inputs writes
byte-identical provenance; only the image file may differ in metadata.
"""

import hashlib
import json
import os

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .recipes import FigureRecipe, InputSpec


class FigureDataError(ValueError):
    """Input data missing, empty, or lacking a required column."""


def read_table(path) -> dict:
    """CSV -> {column: float array}; empty cells become nan."""
    if not os.path.exists(path):
        raise FigureDataError(f"input file {path} does not exist")
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header:
            raise FigureDataError(f"{path} is empty")
        names = header.split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if not rows:
        raise FigureDataError(f"{path} has a header but no data rows")
    cols = {}
    for j, name in enumerate(names):
        vals = [r[j] if j < len(r) else "" for r in rows]
        cols[name] = np.array([float(v) if v != "" else np.nan for v in vals])
    return cols


def _column(table: dict, name: str, path) -> np.ndarray:
    if name not in table:
        raise FigureDataError(
            f"{path} lacks required column '{name}' "
            f"(has: {', '.join(table)})")
    return table[name]


def _series_for(spec: InputSpec, panel_col: str, default_x: str):
    """(x, y) arrays for one input and one panel column."""
    table = read_table(spec.path)
    xcol = spec.x or default_x
    ycol = spec.y or panel_col
    if spec.reduce:
        src = _column(table, spec.over or ycol, spec.path)
        if spec.reduce == "min":
            val = np.nanmin(src)
        else:  # argmin: the x-column value at the source minimum
            xv = _column(table, xcol, spec.path)
            val = xv[np.nanargmin(src)]
        return np.array([spec.N]), np.array([val / spec.y_scale])
    x = _column(table, xcol, spec.path) / spec.x_scale
    y = _column(table, ycol, spec.path) / spec.y_scale
    keep = ~(np.isnan(x) | np.isnan(y))
    return x[keep], y[keep]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _guide_xy(guide, x_lo: float, x_hi: float, log_x: bool):
    x0, y0 = guide.anchor
    xs = (np.geomspace(x_lo, x_hi, 50) if log_x and x_lo > 0
          else np.linspace(x_lo, x_hi, 50))
    return xs, y0 * (xs / x0) ** guide.exponent


def render(recipe: FigureRecipe) -> str:
    """Draw the recipe; returns the image path (provenance sits next to it)."""
    panels = recipe.y
    fig, axes = plt.subplots(len(panels), 1, figsize=(5.0, 2.8 * len(panels)),
                             sharex=True, squeeze=False)
    axes = axes[:, 0]
    prov_series = []
    for spec in recipe.inputs:
        for ycol, ax in zip(panels, axes):
            x, y = _series_for(spec, ycol, recipe.x)
            style = spec.style or ("o" if spec.reduce else "-")
            label = spec.label or os.path.basename(spec.path)
            ax.plot(x, y, style, label=label, ms=4)
            prov_series.append({
                "input": os.path.basename(spec.path),
                "label": label, "column": ycol,
                "x": [float(v) for v in x],
                "y": [float(v) for v in y],
            })
    prov_guides = []
    for guide in recipe.guides:
        col = guide.column or panels[0]
        if col not in panels:
            raise FigureDataError(
                f"recipe {recipe.id}: guide column '{col}' is not drawn")
        ax = axes[panels.index(col)]
        lo, hi = ax.get_xlim() if recipe.xscale != "log" else (
            max(min(ln.get_xdata().min() for ln in ax.get_lines()), 1e-300),
            max(ln.get_xdata().max() for ln in ax.get_lines()))
        xs, ys = _guide_xy(guide, lo, hi, recipe.xscale == "log")
        ax.plot(xs, ys, guide.style, color="k", lw=1,
                label=guide.label or None)
        prov_guides.append({"column": col, "exponent": guide.exponent,
                            "anchor": [float(v) for v in guide.anchor]})
    for ycol, ax in zip(panels, axes):
        ax.set_xscale(recipe.xscale)
        ax.set_yscale(recipe.yscale)
        ax.set_ylabel(recipe.ylabel or ycol)
        ax.legend(fontsize=7, frameon=False)
    axes[-1].set_xlabel(recipe.xlabel or recipe.x)
    if recipe.title:
        axes[0].set_title(recipe.title)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(recipe.out)), exist_ok=True)
    fig.savefig(recipe.out, dpi=150)
    plt.close(fig)

    prov = {
        "figure": recipe.id,
        "inputs": [{"path": os.path.basename(s.path),
                    "sha256": _sha256(s.path)} for s in recipe.inputs],
        "series": prov_series,
        "guides": prov_guides,
        "axes": {"x": recipe.x, "y": list(panels),
                 "xscale": recipe.xscale, "yscale": recipe.yscale},
    }
    prov_path = os.path.splitext(recipe.out)[0] + ".provenance.json"
    with open(prov_path, "w") as fh:
        json.dump(prov, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return recipe.out
