"""Command-line front end.

Frequencies are entered as plain f (kHz/MHz as labeled), meaning omega = 2 pi f;
times in output files are microseconds.  Every run writes a manifest with the
fully resolved configuration, and `--config resolved.json` replays it exactly
(explicit flags override file values, which override the built-in defaults).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, experiments, fock
from .errors import ConfigError, KerrlepError
from .fock import FockDensityMatrix, TruncatedSpace
from .lindblad import IntegratorControls, steady_state
from .liouville import closed_form_spectrum, lep_detuning
from .observables import GridSpec, embed_in_fock, wigner
from .params import SystemParams, cat_basis_params

TWO_PI = 2.0 * math.pi

DEFAULTS = {
    "kerr_mhz": 6.7,
    "drive_mhz": 15.5,
    "kappa_khz": 10.0,
    "kappa_phi_khz": 0.0,
    "delta_khz": 0.0,
    "detuning_rel": None,       # list; when set, overrides delta_khz per sweep
    "snapshot_rels": None,      # list; default (0.5, 3.0)
    "dim": 30,
    "rtol": 1e-8,
    "atol": 1e-10,
    "max_step_ns": None,
    "max_time_us": None,
    "backend": "auto",
    "jobs": 0,                  # 0 = all cores
    "outdir": None,             # None = $KERRLEP_OUTDIR or ./kerrlep-out
    "delta_rel_max": 2.0,
    "delta_points": 201,
    "alpha_min": 1.0,
    "alpha_max": 2.5,
    "alpha_points": 31,
    "time_factor": 4.0,
    "time_points": 400,
    "snapshot_panels": 6,
    "map_delta_points": 25,
    "map_delta_rel_max": 3.0,
    "map_time_points": 50,
    "wigner_points": 201,
    "halfwidth": None,          # None = alpha + 4
    "state": "cat-plus",
    "initial": "cat-mixture",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--outdir", help="output directory (default $KERRLEP_OUTDIR or ./kerrlep-out)")
    parser.add_argument("--kerr-mhz", type=float, help="Kerr coefficient K/2pi in MHz")
    parser.add_argument("--drive-mhz", type=float, help="two-photon drive P/2pi in MHz")
    parser.add_argument("--kappa-khz", type=float, help="single-photon loss kappa/2pi in kHz")
    parser.add_argument("--kappa-phi-khz", type=float, help="pure dephasing kappa_phi/2pi in kHz")
    parser.add_argument("--delta-khz", type=float, help="absolute detuning Delta/2pi in kHz")
    parser.add_argument("--detuning-rel", help="comma list of detunings in units of the "
                                               "critical detuning Delta_LEP2")
    parser.add_argument("--dim", type=int, help="Fock truncation (levels)")
    parser.add_argument("--rtol", type=float, help="integrator relative tolerance")
    parser.add_argument("--atol", type=float, help="integrator absolute tolerance")
    parser.add_argument("--max-step-ns", type=float, help="integrator step ceiling in ns")
    parser.add_argument("--max-time-us", type=float, help="steady-state integration budget in microseconds")
    parser.add_argument("--backend", choices=["auto", "numba", "numpy"],
                        help="stepper implementation")
    parser.add_argument("--jobs", type=int, help="worker processes (0 = all cores)")
    parser.add_argument("--dry-run", action="store_true",
                        help="print the resolved config and planned grid sizes, compute nothing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrlep",
        description="Driven-dissipative Kerr-cat qubit: Liouvillian spectra, "
                    "exceptional-point physics, master-equation dynamics and "
                    "figure-data sweeps.  Frequencies are f with omega = 2 pi f; "
                    "output times are in microseconds.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lep", help="print the critical detuning Delta_LEP2 (kHz and kappa multiples)")
    _add_common(p)

    p = sub.add_parser("spectrum", help="eigenvalue branches over a detuning grid + critical-detuning curve")
    _add_common(p)
    p.add_argument("--delta-rel-max", type=float, help="grid half-width in units of Delta_LEP2")
    p.add_argument("--delta-points", type=int, help="detuning grid points")
    p.add_argument("--alpha-min", type=float, help="curve grid: smallest cat amplitude")
    p.add_argument("--alpha-max", type=float, help="curve grid: largest cat amplitude")
    p.add_argument("--alpha-points", type=int, help="curve grid points")

    p = sub.add_parser("dynamics", help="Bloch traces (full + reduced) from the coherent state")
    _add_common(p)
    p.add_argument("--time-factor", type=float, help="window in units of 1/(alpha^2 kappa)")
    p.add_argument("--time-points", type=int, help="samples across the window")

    p = sub.add_parser("phase-diff", help="coherence phase difference across the detuning grid")
    _add_common(p)
    p.add_argument("--delta-points", type=int, help="detuning grid points")
    p.add_argument("--map-delta-rel-max", type=float, help="grid half-width in units of Delta_LEP2")

    p = sub.add_parser("snapshots", help="Bloch trajectories with Wigner panels")
    _add_common(p)
    p.add_argument("--time-factor", type=float, help="window in units of 1/(alpha^2 kappa)")
    p.add_argument("--time-points", type=int, help="trajectory samples")
    p.add_argument("--snapshot-panels", type=int, help="Wigner panels per detuning")
    p.add_argument("--wigner-points", type=int, help="Wigner grid points per axis")

    p = sub.add_parser("fidelity-map", help="full-vs-reduced Uhlmann fidelity over detuning and time")
    _add_common(p)
    p.add_argument("--map-delta-points", type=int, help="detuning grid points")
    p.add_argument("--map-delta-rel-max", type=float, help="grid half-width in units of Delta_LEP2")
    p.add_argument("--map-time-points", type=int, help="time samples")
    p.add_argument("--time-factor", type=float, help="window in units of 1/(alpha^2 kappa)")

    p = sub.add_parser("wigner", help="Wigner function of a reference state (CSV + JSON)")
    _add_common(p)
    p.add_argument("--state", choices=["vacuum", "coherent-plus", "cat-plus",
                                       "cat-minus", "steady-mixture"],
                   help="which state to render")
    p.add_argument("--halfwidth", type=float, help="grid half-width in phase-space units (default alpha + 4)")
    p.add_argument("--wigner-points", type=int, help="grid points per axis")

    p = sub.add_parser("steady-state", help="relax the master equation to its fixed point")
    _add_common(p)
    p.add_argument("--initial", choices=["cat-mixture", "coherent"],
                   help="relaxation seed")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags, collecting all violations."""
    resolved = dict(DEFAULTS)
    problems = []
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"config file: {exc}"]) from exc
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]          # accept a manifest directly
        flat = dict(loaded)
        # spec-style configs carry a "system" block in Hz (manifest echo);
        # CLI-style resolved configs carry the unit-suffixed fields verbatim,
        # which is what makes the round trip bit-exact
        system = flat.pop("system", {})
        unit_map = {"kerr_hz": ("kerr_mhz", 1e-6), "drive_hz": ("drive_mhz", 1e-6),
                    "kappa_hz": ("kappa_khz", 1e-3), "kappa_phi_hz": ("kappa_phi_khz", 1e-3),
                    "delta_hz": ("delta_khz", 1e-3)}
        for key, val in system.items():
            if key in unit_map:
                name, scale = unit_map[key]
                flat[name] = val * scale
            else:
                problems.append(f"config: unknown system field {key!r}")
        flat.pop("version", None)
        controls = flat.pop("controls", None)
        if isinstance(controls, dict):
            for src, dst, scale in (("rtol", "rtol", 1.0), ("atol", "atol", 1.0),
                                    ("max_step", "max_step_ns", 1e9),
                                    ("max_time", "max_time_us", 1e6)):
                if controls.get(src) is not None:
                    flat[dst] = controls[src] * scale
            if controls.get("backend"):
                flat["backend"] = controls["backend"]
        if "detuning_rels" in flat:
            flat["detuning_rel"] = ",".join(str(v) for v in flat.pop("detuning_rels"))
        if flat.get("snapshot_rels") is not None:
            flat["snapshot_rels"] = tuple(flat["snapshot_rels"])
        for key, val in flat.items():
            if key in resolved:
                resolved[key] = val
            else:
                problems.append(f"config: unknown field {key!r}")
    for key in resolved:
        if hasattr(args, key) and getattr(args, key) is not None:
            resolved[key] = getattr(args, key)
    if getattr(args, "dry_run", False):
        resolved["dry_run"] = True

    for name in ("kerr_mhz", "drive_mhz"):
        if not isinstance(resolved[name], (int, float)) or resolved[name] <= 0:
            problems.append(f"{name} must be > 0")
    for name in ("kappa_khz", "kappa_phi_khz"):
        if not isinstance(resolved[name], (int, float)) or resolved[name] < 0:
            problems.append(f"{name} must be >= 0")
    if resolved["dim"] < 2:
        problems.append("dim must be >= 2")
    if resolved["rtol"] <= 0 or resolved["atol"] <= 0:
        problems.append("rtol and atol must be > 0")
    if resolved["jobs"] < 0:
        problems.append("jobs must be >= 0")
    if isinstance(resolved["detuning_rel"], str):
        try:
            resolved["detuning_rel"] = [float(v) for v in resolved["detuning_rel"].split(",")]
        except ValueError:
            problems.append("detuning-rel must be a comma list of numbers")
    if problems:
        raise ConfigError(problems)
    return resolved


def _system(resolved: dict) -> SystemParams:
    return SystemParams.from_frequencies(
        delta_hz=resolved["delta_khz"] * 1e3,
        kerr_hz=resolved["kerr_mhz"] * 1e6,
        drive_hz=resolved["drive_mhz"] * 1e6,
        kappa_hz=resolved["kappa_khz"] * 1e3,
        kappa_phi_hz=resolved["kappa_phi_khz"] * 1e3,
    )


def _controls(resolved: dict) -> IntegratorControls:
    return IntegratorControls(
        rtol=resolved["rtol"], atol=resolved["atol"],
        max_step=(resolved["max_step_ns"] * 1e-9
                  if resolved["max_step_ns"] is not None else None),
        max_time=(resolved["max_time_us"] * 1e-6
                  if resolved["max_time_us"] is not None else None),
        backend=resolved["backend"],
    )


def _spec(resolved: dict) -> experiments.SweepSpec:
    params = _system(resolved)
    rels = resolved["detuning_rel"] or [0.25, 0.5, 1.0, 2.0, 3.0]
    jobs = resolved["jobs"] or (os.cpu_count() or 1)
    if resolved["snapshot_rels"]:
        snapshot_rels = tuple(sorted(set(float(v) for v in resolved["snapshot_rels"])))
    elif resolved["detuning_rel"]:
        snapshot_rels = tuple(sorted(set(rels)))
    else:
        snapshot_rels = (0.5, 3.0)
    return experiments.SweepSpec(
        params=params,
        dim=resolved["dim"],
        detuning_rels=tuple(sorted(rels)),
        delta_rel_max=resolved["delta_rel_max"],
        delta_points=resolved["delta_points"],
        alpha_min=resolved["alpha_min"],
        alpha_max=resolved["alpha_max"],
        alpha_points=resolved["alpha_points"],
        time_factor=resolved["time_factor"],
        time_points=resolved["time_points"],
        snapshot_rels=snapshot_rels,
        snapshot_panels=resolved["snapshot_panels"],
        map_delta_points=resolved["map_delta_points"],
        map_delta_rel_max=resolved["map_delta_rel_max"],
        map_time_points=resolved["map_time_points"],
        wigner_points=resolved["wigner_points"],
        controls=_controls(resolved),
        jobs=jobs,
    )


def _outdir(resolved: dict) -> str:
    return (resolved["outdir"] or os.environ.get("KERRLEP_OUTDIR")
            or os.path.join(os.getcwd(), "kerrlep-out"))


_GRID_HINTS = {
    "spectrum": lambda s: {"delta_points": s.delta_points, "alpha_points": s.alpha_points},
    "dynamics": lambda s: {"detunings": len(s.detuning_rels), "time_points": s.time_points},
    "phase-diff": lambda s: {"delta_points": s.delta_points},
    "snapshots": lambda s: {"detunings": len(s.snapshot_rels),
                            "time_points": s.time_points,
                            "wigner_panels": s.snapshot_panels,
                            "wigner_points": s.wigner_points},
    "fidelity-map": lambda s: {"delta_points": s.map_delta_points,
                               "time_points": s.map_time_points},
    "wigner": lambda s: {"wigner_points": s.wigner_points},
    "steady-state": lambda s: {},
    "lep": lambda s: {},
}


def _dry_run(command: str, spec: experiments.SweepSpec, resolved: dict) -> int:
    payload = {"command": command, "config": spec.resolved(),
               "outdir": _outdir(resolved),
               "planned_grids": _GRID_HINTS[command](spec)}
    print(json.dumps(payload, indent=1, sort_keys=True))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        resolved = _resolve(args)
        spec = _spec(resolved)
        if resolved.get("dry_run"):
            return _dry_run(args.command, spec, resolved)
        return _dispatch(args.command, spec, resolved)
    except KerrlepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(command: str, spec: experiments.SweepSpec, resolved: dict) -> int:
    outdir = _outdir(resolved)
    params = spec.params

    if command == "lep":
        dlep = lep_detuning(params)
        print(f"delta_lep2_khz={dlep / TWO_PI / 1e3:.6f} "
              f"kappa_multiple={dlep / params.kappa:.6f} "
              f"alpha={params.alpha:.6f}")
        return 0

    if command == "spectrum":
        result = experiments.spectrum_sweep(spec)
    elif command == "dynamics":
        result = experiments.dynamics_sweep(spec)
    elif command == "phase-diff":
        result = experiments.phase_diff_sweep(spec)
    elif command == "snapshots":
        result = experiments.bloch_wigner_snapshots(spec)
    elif command == "fidelity-map":
        result = experiments.fidelity_map(spec)
    elif command == "wigner":
        return _run_wigner(spec, resolved, outdir)
    elif command == "steady-state":
        return _run_steady_state(spec, resolved, outdir)
    else:  # pragma: no cover - argparse guards
        raise ValueError(f"unknown command {command!r}")

    manifest = result.write(outdir)
    _write_resolved(outdir, resolved)
    for entry in manifest["files"]:
        print(f"wrote {os.path.join(outdir, entry['name'])} ({entry['bytes']} bytes)")
    print(f"wrote {os.path.join(outdir, 'manifest.json')}")
    return 0


def _write_resolved(outdir: str, resolved: dict) -> None:
    echo = {k: v for k, v in resolved.items() if k != "dry_run"}
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "config.resolved.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(echo, fh, indent=1, sort_keys=True)
    print(f"wrote {path}")


def _run_wigner(spec: experiments.SweepSpec, resolved: dict, outdir: str) -> int:
    params = spec.params
    cat = cat_basis_params(params)
    space = TruncatedSpace(spec.dim)
    kind = resolved["state"]
    if kind == "vacuum":
        vec = np.zeros(spec.dim)
        vec[0] = 1.0
        state = FockDensityMatrix.from_state(vec)
    elif kind == "coherent-plus":
        state = FockDensityMatrix.from_state(fock.coherent_state(cat.alpha, space))
    elif kind == "cat-plus":
        state = FockDensityMatrix.from_state(fock.cat_state(cat.alpha, +1, space))
    elif kind == "cat-minus":
        state = FockDensityMatrix.from_state(fock.cat_state(cat.alpha, -1, space))
    else:  # steady-mixture
        from .observables import QubitDensityMatrix

        state = embed_in_fock(QubitDensityMatrix(closed_form_spectrum(params).rho_ss),
                              cat, space)
    halfwidth = resolved["halfwidth"] or (cat.alpha + 4.0)
    grid = GridSpec(halfwidth=halfwidth, points=resolved["wigner_points"])
    w = wigner(state, grid)
    os.makedirs(outdir, exist_ok=True)
    meta = {"state": kind, "alpha": f"{cat.alpha:.12e}", "code_version": __version__}
    csv_path = os.path.join(outdir, f"wigner_{kind}.csv")
    w.to_csv(csv_path, metadata=meta)
    json_path = os.path.join(outdir, f"wigner_{kind}.json")
    w.to_json(json_path, metadata=meta)
    _write_resolved(outdir, resolved)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    print(f"wigner_min={w.min():.6e} wigner_integral={w.integral():.6f}")
    return 0


def _run_steady_state(spec: experiments.SweepSpec, resolved: dict, outdir: str) -> int:
    params = spec.params
    cat = cat_basis_params(params)
    initial = resolved["initial"].replace("-", "_")
    result = steady_state(params, space=TruncatedSpace(spec.dim),
                          controls=spec.controls, initial=initial)
    from .observables import project_to_cat_subspace

    qubit, leakage = project_to_cat_subspace(result.state, cat)
    payload = {
        "residual": result.residual,
        "residual_target": result.residual_target,
        "time_integrated_us": result.time_integrated * 1e6,
        "weight_plus": qubit.matrix[0, 0].real * (1.0 - leakage),
        "weight_minus": qubit.matrix[1, 1].real * (1.0 - leakage),
        "coherence_abs": abs(qubit.matrix[0, 1]),
        "leakage": leakage,
        "config": spec.resolved(),
    }
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "steady_state.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    mat_path = os.path.join(outdir, "steady_state_matrix.csv")
    with open(mat_path, "w", encoding="utf-8") as fh:
        fh.write("# steady-state density matrix, columns: row,col,re,im\n")
        fh.write("row,col,re,im\n")
        m = result.state.matrix
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                fh.write(f"{i},{j},{m[i, j].real:.12e},{m[i, j].imag:.12e}\n")
    _write_resolved(outdir, resolved)
    print(f"wrote {path}")
    print(f"wrote {mat_path}")
    print(f"residual={result.residual:.3e} leakage={leakage:.3e}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
