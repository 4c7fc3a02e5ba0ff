import json
import math
import subprocess
import sys

import pytest

from kerrlep_plots import (FigureRecipe, RecipeError, SchemaError,
                           WIGNER_LIMIT, load_recipe, render)
from kerrlep_plots.io import read_table, read_wigner
from kerrlep_plots.render import FIGURE_KINDS, _fig_snapshots


def _recipe_for(kind, sweep_outputs, wigner_paths, output):
    if kind == "spectrum":
        inputs = {"spectrum": str(sweep_outputs / "spectrum" / "spectrum.csv"),
                  "lep_curve": str(sweep_outputs / "spectrum" / "lep_curve.csv")}
    elif kind == "dynamics":
        inputs = {"dynamics": str(sweep_outputs / "dynamics" / "dynamics.csv")}
    elif kind == "phase_diff":
        inputs = {"phase_diff": str(sweep_outputs / "phase_diff" / "phase_diff.csv")}
    elif kind == "snapshots":
        inputs = {"trajectory": str(sweep_outputs / "snapshots" /
                                    "snapshots_trajectory.csv"),
                  "wigners": wigner_paths}
    else:
        inputs = {"fidelity_map": str(sweep_outputs / "fidelity_map" /
                                      "fidelity_map.csv")}
    return FigureRecipe(kind=kind, inputs=inputs, output=str(output))


@pytest.mark.parametrize("kind", sorted(FIGURE_KINDS))
@pytest.mark.parametrize("ext", ["png", "svg"])
def test_all_kinds_render_and_are_reproducible(kind, ext, sweep_outputs,
                                               wigner_paths, tmp_path):
    out1 = tmp_path / f"{kind}_a.{ext}"
    out2 = tmp_path / f"{kind}_b.{ext}"
    render(_recipe_for(kind, sweep_outputs, wigner_paths, out1))
    render(_recipe_for(kind, sweep_outputs, wigner_paths, out2))
    blob1, blob2 = out1.read_bytes(), out2.read_bytes()
    assert len(blob1) > 2000
    assert blob1 == blob2          # byte-identical on repeated runs


def test_wigner_panels_use_symmetric_extremal_scale(sweep_outputs, wigner_paths):
    recipe = _recipe_for("snapshots", sweep_outputs, wigner_paths, "unused.png")
    fig = _fig_snapshots(recipe)
    try:
        from matplotlib.collections import QuadMesh

        meshes = [artist for ax in fig.axes for artist in ax.collections
                  if isinstance(artist, QuadMesh)]
        assert len(meshes) >= 6    # one per wigner panel
        for mesh in meshes:
            lo, hi = mesh.get_clim()
            assert lo == pytest.approx(-2.0 / math.pi, rel=1e-12)
            assert hi == pytest.approx(2.0 / math.pi, rel=1e-12)
        assert WIGNER_LIMIT == pytest.approx(2.0 / math.pi, rel=1e-15)
    finally:
        import matplotlib.pyplot as plt

        plt.close(fig)


def test_missing_column_is_named(tmp_path, sweep_outputs, wigner_paths):
    bad = tmp_path / "bad.csv"
    bad.write_text("# kappa_hz = 1\n"
                   "delta_rel,t_us,x\n"
                   "0.5,0.0,1.0\n")
    recipe = FigureRecipe(kind="dynamics", inputs={"dynamics": str(bad)},
                          output=str(tmp_path / "f.png"))
    with pytest.raises(SchemaError, match="'y'"):
        render(recipe)


def test_empty_grid_is_schema_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("# kappa_hz = 1\ndelta_rel,t_us,fidelity\n")
    recipe = FigureRecipe(kind="fidelity_map",
                          inputs={"fidelity_map": str(empty)},
                          output=str(tmp_path / "f.png"))
    with pytest.raises(SchemaError, match="no data rows"):
        render(recipe)


def test_missing_provenance_header_is_rejected(tmp_path):
    headerless = tmp_path / "no_meta.csv"
    headerless.write_text("delta_rel,t_us,fidelity\n0.5,0.0,1.0\n")
    with pytest.raises(SchemaError, match="provenance"):
        read_table(str(headerless))


def test_missing_file_is_schema_error(tmp_path):
    recipe = FigureRecipe(kind="phase_diff",
                          inputs={"phase_diff": str(tmp_path / "nope.csv")},
                          output=str(tmp_path / "f.png"))
    with pytest.raises(SchemaError, match="does not exist"):
        render(recipe)


def test_recipe_validation(tmp_path):
    with pytest.raises(RecipeError, match="unknown figure kind"):
        FigureRecipe(kind="pie", inputs={}, output="f.png")
    with pytest.raises(RecipeError, match="missing inputs"):
        FigureRecipe(kind="spectrum", inputs={}, output="f.png")
    with pytest.raises(RecipeError, match="unknown inputs"):
        FigureRecipe(kind="spectrum",
                     inputs={"spectrum": "s.csv", "frob": "x"}, output="f.png")
    with pytest.raises(RecipeError, match=".png or .svg"):
        FigureRecipe(kind="spectrum", inputs={"spectrum": "s.csv"},
                     output="fig.pdf")


def test_recipe_loading_resolves_relative_paths(tmp_path, sweep_outputs):
    recipe_path = tmp_path / "r.json"
    recipe_path.write_text(json.dumps({
        "kind": "spectrum",
        "inputs": {"spectrum": str(sweep_outputs / "spectrum" / "spectrum.csv")},
        "output": "figs/spectrum.png",
    }))
    recipe = load_recipe(str(recipe_path))
    assert recipe.output == str(tmp_path / "figs" / "spectrum.png")
    render(recipe)
    assert (tmp_path / "figs" / "spectrum.png").exists()


def test_cli_renders_and_reports_errors(tmp_path, sweep_outputs):
    recipe_path = tmp_path / "r.json"
    recipe_path.write_text(json.dumps({
        "kind": "phase_diff",
        "inputs": {"phase_diff": str(sweep_outputs / "phase_diff" / "phase_diff.csv")},
        "output": str(tmp_path / "phi.svg"),
    }))
    proc = subprocess.run([sys.executable, "-m", "kerrlep_plots.cli", "render",
                           str(recipe_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "phi.svg").exists()

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "nope", "inputs": {}, "output": "f.png"}))
    proc = subprocess.run([sys.executable, "-m", "kerrlep_plots.cli", "render",
                           str(bad)], capture_output=True, text=True)
    assert proc.returncode == 2
    assert proc.stderr.startswith("error:")


def test_wigner_reader_round_trip(wigner_paths):
    panel = read_wigner(wigner_paths[0])
    assert panel.values.shape == (panel.p.size, panel.x.size)
    assert "delta_rel" in panel.meta and "t_us" in panel.meta
    # a proper state normalizes on its grid
    dx = panel.x[1] - panel.x[0]
    dp = panel.p[1] - panel.p[0]
    assert abs(float(panel.values.sum()) * dx * dp - 1.0) < 5e-3
