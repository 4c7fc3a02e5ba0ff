"""Render kerrlep sweep outputs into publication-style figures.

This package only reads the CSV/JSON files the simulation emits; it never
recomputes physics and never imports the simulation package.
"""

__version__ = "0.1.0"

from .errors import RecipeError, SchemaError
from .recipes import FigureRecipe, load_recipe
from .render import FIGURE_KINDS, WIGNER_LIMIT, render

__all__ = ["FIGURE_KINDS", "FigureRecipe", "RecipeError", "SchemaError",
           "WIGNER_LIMIT", "load_recipe", "render"]
