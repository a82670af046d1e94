"""Figure recipes and the manifest that holds them.

A recipe is plotting-side plumbing only: which CSVs, which columns,
axis scales, optional power-law guide lines, and where the image goes.
Paths inside a manifest are resolved relative to the manifest file, so
a recipe suite travels with its data directory.
"""

from dataclasses import dataclass, field, fields
import json
import os


class RecipeError(ValueError):
    """Malformed recipe or manifest."""


@dataclass
class GuideLine:
    """Power-law guide y = y0 * (x/x0)^exponent through anchor (x0, y0)."""

    exponent: float
    anchor: tuple          # (x0, y0)
    label: str = ""
    style: str = "--"      # matplotlib linestyle
    column: str = ""       # which y-panel it belongs to ("" = first)


@dataclass
class InputSpec:
    """One curve (or point set) taken from one CSV file.

    reduce turns the whole file into a single point at x = N:
    "min" takes the minimum of the source column, "argmin" takes the
    x-column value where the source column is minimal (optimum times).
    The source column is `over` when given, else the panel's y column.
    """

    path: str
    label: str = ""
    style: str = ""        # matplotlib format string; "" picks a default
    x: str = ""            # per-input x column override
    y: str = ""            # per-input y column override
    x_scale: float = 1.0   # x is divided by this (collapse plots)
    y_scale: float = 1.0   # y is divided by this (densities)
    reduce: str = ""       # "" | "min" | "argmin"
    over: str = ""         # column the reduction minimizes
    N: float = 0.0         # x coordinate of the reduced point


@dataclass
class FigureRecipe:
    id: str
    inputs: list           # of InputSpec
    x: str                 # default x column
    y: list                # y columns, one stacked panel each
    out: str               # image path
    xscale: str = "linear"
    yscale: str = "linear"
    guides: list = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""


def _build(cls, obj, where):
    if not isinstance(obj, dict):
        raise RecipeError(f"{where}: expected an object, got {type(obj).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = set(obj) - names
    if unknown:
        raise RecipeError(f"{where}: unknown key(s) {sorted(unknown)}")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise RecipeError(f"{where}: {exc}") from None


def recipe_from_dict(obj: dict, base: str = ".") -> FigureRecipe:
    """Build and validate one recipe; relative paths resolve against base."""
    raw_inputs = obj.get("inputs", [])
    raw_guides = obj.get("guides", [])
    obj = {k: v for k, v in obj.items() if k not in ("inputs", "guides")}
    rec = _build(FigureRecipe, {**obj, "inputs": [], "guides": []},
                 obj.get("id", "<recipe>"))
    if not isinstance(rec.y, list) or not rec.y:
        raise RecipeError(f"{rec.id}: 'y' must be a non-empty list of columns")
    for scale in (rec.xscale, rec.yscale):
        if scale not in ("linear", "log"):
            raise RecipeError(f"{rec.id}: axis scale {scale!r} is not "
                              "'linear' or 'log'")
    if not raw_inputs:
        raise RecipeError(f"{rec.id}: recipe has no inputs")
    for i, item in enumerate(raw_inputs):
        spec = _build(InputSpec, item, f"{rec.id}.inputs[{i}]")
        if not os.path.isabs(spec.path):
            spec.path = os.path.normpath(os.path.join(base, spec.path))
        if spec.reduce not in ("", "min", "argmin"):
            raise RecipeError(f"{rec.id}: reduce={spec.reduce!r} not supported")
        if spec.reduce and spec.N <= 0:
            raise RecipeError(f"{rec.id}: reduced input needs N > 0")
        rec.inputs.append(spec)
    for i, item in enumerate(raw_guides):
        g = _build(GuideLine, item, f"{rec.id}.guides[{i}]")
        g.anchor = tuple(float(v) for v in g.anchor)
        if len(g.anchor) != 2:
            raise RecipeError(f"{rec.id}: guide anchor must be (x0, y0)")
        rec.guides.append(g)
    if not os.path.isabs(rec.out):
        rec.out = os.path.normpath(os.path.join(base, rec.out))
    return rec


def load_manifest(path) -> list:
    """Read a manifest JSON: {"figures": [recipe, ...]} -> [FigureRecipe]."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecipeError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or "figures" not in doc:
        raise RecipeError(f"{path}: manifest must be an object with a "
                          "'figures' list")
    base = os.path.dirname(os.path.abspath(path))
    recipes = [recipe_from_dict(item, base) for item in doc["figures"]]
    ids = [r.id for r in recipes]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise RecipeError(f"{path}: duplicate figure id(s) {sorted(dup)}")
    return recipes
