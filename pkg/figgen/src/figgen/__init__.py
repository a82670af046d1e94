"""Figure regeneration from simulation CSV outputs.

This package never imports the simulation code: everything it knows
about a run arrives through the documented CSV columns (and, for
provenance, the file bytes themselves). Recipes live in a JSON
manifest; rendering a recipe writes one image plus a provenance JSON
whose data series are byte-identical across reruns.
"""

from .recipes import FigureRecipe, InputSpec, GuideLine, RecipeError, load_manifest
from .render import render, read_table, FigureDataError

__all__ = [
    "FigureRecipe", "InputSpec", "GuideLine", "RecipeError",
    "load_manifest", "render", "read_table", "FigureDataError",
]

__version__ = "0.1.0"
