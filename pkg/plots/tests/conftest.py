import json
import subprocess
import sys

import pytest

SCALED = ["--kerr-mhz", "6.7", "--drive-mhz", "9.648", "--kappa-khz", "50",
          "--dim", "18"]


def run_cli(*argv):
    proc = subprocess.run([sys.executable, "-m", "kerrlep.cli", *argv],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def sweep_outputs(tmp_path_factory):
    """Fresh sweep outputs from the simulation CLI (scaled system, small grids)."""
    root = tmp_path_factory.mktemp("sweeps")
    run_cli("spectrum", "--outdir", str(root / "spectrum"), *SCALED,
            "--delta-points", "21", "--alpha-points", "5")
    run_cli("dynamics", "--outdir", str(root / "dynamics"), *SCALED,
            "--detuning-rel", "0.5,3.0", "--time-factor", "2.0",
            "--time-points", "40")
    run_cli("phase-diff", "--outdir", str(root / "phase_diff"), *SCALED,
            "--delta-points", "21")
    run_cli("snapshots", "--outdir", str(root / "snapshots"), *SCALED,
            "--time-factor", "2.0", "--time-points", "40",
            "--snapshot-panels", "3", "--wigner-points", "41")
    run_cli("fidelity-map", "--outdir", str(root / "fidelity_map"), *SCALED,
            "--map-delta-points", "5", "--map-time-points", "6",
            "--time-factor", "2.0")
    return root


@pytest.fixture(scope="session")
def wigner_paths(sweep_outputs):
    manifest = json.loads((sweep_outputs / "snapshots" / "manifest.json").read_text())
    return sorted(str(sweep_outputs / "snapshots" / e["name"])
                  for e in manifest["files"] if e["name"].startswith("wigner_"))
