import json
import math
import os

import numpy as np
import pytest

from kerrlep.cli import main

SCALED = ["--kerr-mhz", "6.7", "--drive-mhz", "9.648", "--kappa-khz", "50",
          "--dim", "18"]


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_lep_prints_critical_detuning(capsys):
    code, out, err = run(capsys, "lep")
    assert code == 0
    fields = dict(kv.split("=") for kv in out.split())
    assert float(fields["delta_lep2_khz"]) == pytest.approx(255.458673, abs=1e-3)
    assert float(fields["kappa_multiple"]) == pytest.approx(25.5459, abs=1e-3)


def test_dry_run_reports_grids_without_files(tmp_path, capsys):
    code, out, err = run(capsys, "fidelity-map", "--dry-run",
                         "--outdir", str(tmp_path / "x"))
    assert code == 0
    payload = json.loads(out)
    assert payload["planned_grids"] == {"delta_points": 25, "time_points": 50}
    assert payload["config"]["system"]["kerr_hz"] == pytest.approx(6.7e6)
    assert not (tmp_path / "x").exists()


def test_validation_lists_every_problem(capsys):
    code, out, err = run(capsys, "lep", "--kappa-khz", "-5", "--dim", "1",
                         "--rtol", "-1")
    assert code == 2
    assert err.startswith("error: ")
    assert "\n" == err[-1] and err.count("\n") == 1     # single line
    for needle in ("kappa_khz", "dim", "rtol"):
        assert needle in err


def test_spectrum_writes_files_and_manifest(tmp_path, capsys):
    code, out, err = run(capsys, "spectrum", "--outdir", str(tmp_path),
                         *SCALED, "--delta-points", "11", "--alpha-points", "3")
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    names = {e["name"] for e in manifest["files"]}
    assert names == {"spectrum.csv", "lep_curve.csv"}
    text = (tmp_path / "spectrum.csv").read_text()
    assert text.splitlines()[0].startswith("# ")
    assert "delta_rel" in text


def test_config_round_trip_reproduces_bytes(tmp_path, capsys):
    out1 = tmp_path / "run1"
    code, *_ = run(capsys, "spectrum", "--outdir", str(out1), *SCALED,
                   "--delta-points", "11", "--alpha-points", "3")
    assert code == 0
    resolved = out1 / "config.resolved.json"
    assert resolved.exists()
    out2 = tmp_path / "run2"
    code, *_ = run(capsys, "spectrum", "--config", str(resolved),
                   "--outdir", str(out2))
    assert code == 0
    assert (out1 / "spectrum.csv").read_bytes() == (out2 / "spectrum.csv").read_bytes()
    assert (out1 / "lep_curve.csv").read_bytes() == (out2 / "lep_curve.csv").read_bytes()
    man1 = json.loads((out1 / "manifest.json").read_text())
    man2 = json.loads((out2 / "manifest.json").read_text())
    assert man1["files"] == man2["files"]


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"system": {"kappa_hz": 5e4}, "delta_points": 11}))
    code, out, err = run(capsys, "lep", "--config", str(cfg), "--kappa-khz", "10")
    assert code == 0
    fields = dict(kv.split("=") for kv in out.split())
    assert float(fields["delta_lep2_khz"]) == pytest.approx(255.458673, abs=1e-3)


def test_config_rejects_unknown_fields(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"frobnicate": 1}))
    code, out, err = run(capsys, "lep", "--config", str(cfg))
    assert code == 2
    assert "frobnicate" in err


def test_outdir_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("KERRLEP_OUTDIR", str(tmp_path / "envout"))
    code, out, err = run(capsys, "wigner", "--state", "vacuum",
                         "--wigner-points", "21", "--dim", "12")
    assert code == 0
    assert (tmp_path / "envout" / "wigner_vacuum.csv").exists()
    data = json.loads((tmp_path / "envout" / "wigner_vacuum.json").read_text())
    mid = len(data["x"]) // 2
    assert data["values"][mid][mid] == pytest.approx(2.0 / math.pi, abs=1e-9)


def test_steady_state_subcommand(tmp_path, capsys):
    code, out, err = run(capsys, "steady-state", "--outdir", str(tmp_path),
                         *SCALED)
    assert code == 0
    payload = json.loads((tmp_path / "steady_state.json").read_text())
    assert payload["residual"] < payload["residual_target"]
    assert payload["weight_plus"] == pytest.approx(0.5563, abs=5e-3)
    assert payload["leakage"] < 2e-2


def test_help_mentions_units(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dynamics", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "kHz" in out and "MHz" in out
    assert "microsecond" in out


def test_dynamics_subcommand_small(tmp_path, capsys):
    code, out, err = run(capsys, "dynamics", "--outdir", str(tmp_path), *SCALED,
                         "--detuning-rel", "3.0", "--time-factor", "2.0",
                         "--time-points", "40")
    assert code == 0
    text = (tmp_path / "dynamics.csv").read_text()
    assert "# x_crossings_full_3 = " in text
    count = int(text.split("# x_crossings_full_3 = ")[1].splitlines()[0])
    assert count >= 1
