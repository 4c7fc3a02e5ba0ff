"""Figure recipes: which files go into which figure, and where it lands."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import RecipeError

KINDS = ("spectrum", "dynamics", "phase_diff", "snapshots", "fidelity_map")

#: which input slots each kind requires; list-valued slots end in "s"
REQUIRED_INPUTS = {
    "spectrum": ("spectrum",),
    "dynamics": ("dynamics",),
    "phase_diff": ("phase_diff",),
    "snapshots": ("trajectory", "wigners"),
    "fidelity_map": ("fidelity_map",),
}

OPTIONAL_INPUTS = {
    "spectrum": ("lep_curve",),
    "dynamics": (),
    "phase_diff": (),
    "snapshots": (),
    "fidelity_map": (),
}


@dataclass(frozen=True)
class FigureRecipe:
    kind: str
    inputs: dict
    output: str
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RecipeError(f"unknown figure kind {self.kind!r}; "
                              f"choose from {', '.join(KINDS)}")
        missing = [slot for slot in REQUIRED_INPUTS[self.kind]
                   if slot not in self.inputs]
        if missing:
            raise RecipeError(f"{self.kind} recipe is missing inputs: "
                              + ", ".join(missing))
        allowed = set(REQUIRED_INPUTS[self.kind]) | set(OPTIONAL_INPUTS[self.kind])
        unknown = [slot for slot in self.inputs if slot not in allowed]
        if unknown:
            raise RecipeError(f"{self.kind} recipe has unknown inputs: "
                              + ", ".join(unknown))
        ext = os.path.splitext(self.output)[1].lower()
        if ext not in (".png", ".svg"):
            raise RecipeError(f"output must end in .png or .svg, got {self.output!r}")


def load_recipe(path: str) -> FigureRecipe:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise RecipeError(f"cannot read recipe: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RecipeError(f"recipe is not valid JSON: {exc}") from exc
    for key in ("kind", "inputs", "output"):
        if key not in raw:
            raise RecipeError(f"recipe is missing the {key!r} field")
    base = os.path.dirname(os.path.abspath(path))

    def _absolute(value):
        if isinstance(value, list):
            return [_absolute(v) for v in value]
        return value if os.path.isabs(value) else os.path.join(base, value)

    inputs = {slot: _absolute(val) for slot, val in raw["inputs"].items()}
    output = _absolute(raw["output"])
    return FigureRecipe(kind=raw["kind"], inputs=inputs, output=output,
                        style=raw.get("style", {}))
