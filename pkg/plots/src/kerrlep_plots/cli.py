"""`kerrlep-plots render <recipe.json>` — one figure per invocation."""

from __future__ import annotations

import argparse
import sys

from .errors import RecipeError, SchemaError
from .recipes import KINDS, load_recipe
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrlep-plots",
        description="Render kerrlep sweep outputs into figures "
                    f"(kinds: {', '.join(KINDS)}).  PNG and SVG outputs; "
                    "rendering depends only on the recipe and its input files.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a JSON recipe")
    p.add_argument("recipe", help="recipe file: {kind, inputs, output, style?}")
    p.add_argument("--output", help="override the recipe's output path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        recipe = load_recipe(args.recipe)
        if args.output:
            from dataclasses import replace

            recipe = replace(recipe, output=args.output)
        path = render(recipe)
    except (RecipeError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
