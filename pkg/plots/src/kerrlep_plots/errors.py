class RecipeError(ValueError):
    """The recipe file itself is malformed or references a bad kind/path."""


class SchemaError(ValueError):
    """An input file does not match the expected column/metadata schema."""
