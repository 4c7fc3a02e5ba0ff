"""Deterministic figure-data sweeps.

Each sweep evaluates a parameter grid, assembles flat tables, and can write
them as CSV files with ``#``-prefixed provenance headers plus a JSON manifest
carrying sha256 checksums and the fully resolved configuration.  Identical
specs produce bitwise-identical files; worker-pool parallelism never changes
file content because detunings are integrated in fixed-size groups and the
results are assembled in grid order.

Units in files: frequencies and rates as plain f = omega/2pi in Hz, times in
microseconds, detunings also given relative to the critical detuning.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, fock
from .errors import ConfigError
from .fock import FockDensityMatrix, TruncatedSpace
from .lindblad import IntegratorControls, evolve_detuning_batch
from .liouville import (closed_form_spectrum, effective_liouvillian,
                        effective_trajectory, initial_qubit_state,
                        lep_detuning, numeric_spectrum)
from .observables import (default_grid, embed_in_fock,
                          phase_difference, project_to_cat_subspace,
                          uhlmann_fidelity, wigner)
from .params import SystemParams, cat_basis_params

TWO_PI = 2.0 * math.pi

#: detunings integrated together per stepper call; fixed so that file output
#: is independent of the worker count (13 balances the default 25-point
#: fidelity map across two workers)
BATCH_GROUP = 13


@dataclass(frozen=True)
class SweepSpec:
    """Grids and knobs shared by the sweep procedures.

    Detunings are specified relative to the critical detuning of ``params``;
    time windows in units of 1/(alpha^2 kappa).  Every sweep uses only the
    fields it needs.
    """

    params: SystemParams
    dim: int = 30
    detuning_rels: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 3.0)
    delta_rel_max: float = 2.0
    delta_points: int = 201
    alpha_min: float = 1.0
    alpha_max: float = 2.5
    alpha_points: int = 31
    time_factor: float = 4.0
    time_points: int = 400
    snapshot_rels: tuple[float, ...] = (0.5, 3.0)
    snapshot_panels: int = 6
    map_delta_points: int = 25
    map_delta_rel_max: float = 3.0
    map_time_points: int = 50
    wigner_points: int = 201
    controls: IntegratorControls = field(default_factory=IntegratorControls)
    jobs: int = 1

    def __post_init__(self):
        problems = []
        if self.dim < 2:
            problems.append("dim must be >= 2")
        for name in ("detuning_rels", "snapshot_rels"):
            grid = getattr(self, name)
            if len(grid) == 0:
                problems.append(f"{name} must be non-empty")
            elif any(b <= a for a, b in zip(grid, grid[1:], strict=False)):
                problems.append(f"{name} must be strictly increasing")
        for name in ("delta_points", "alpha_points", "time_points",
                     "map_delta_points", "map_time_points", "snapshot_panels",
                     "wigner_points"):
            if getattr(self, name) < 2:
                problems.append(f"{name} must be >= 2")
        if self.alpha_max <= self.alpha_min:
            problems.append("alpha_max must exceed alpha_min")
        if self.time_factor <= 0 or self.delta_rel_max <= 0 or self.map_delta_rel_max <= 0:
            problems.append("window and grid extents must be positive")
        if self.jobs < 1:
            problems.append("jobs must be >= 1")
        if problems:
            raise ConfigError(problems)

    @property
    def space(self) -> TruncatedSpace:
        return TruncatedSpace(self.dim)

    def resolved(self) -> dict:
        """Plain-JSON view of every field, for provenance echoing."""
        p = self.params
        return {
            "version": __version__,
            "system": {
                "delta_hz": p.delta / TWO_PI,
                "kerr_hz": p.kerr / TWO_PI,
                "drive_hz": p.drive / TWO_PI,
                "kappa_hz": p.kappa / TWO_PI,
                "kappa_phi_hz": p.kappa_phi / TWO_PI,
            },
            "dim": self.dim,
            "detuning_rels": list(self.detuning_rels),
            "delta_rel_max": self.delta_rel_max,
            "delta_points": self.delta_points,
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
            "alpha_points": self.alpha_points,
            "time_factor": self.time_factor,
            "time_points": self.time_points,
            "snapshot_rels": list(self.snapshot_rels),
            "snapshot_panels": self.snapshot_panels,
            "map_delta_points": self.map_delta_points,
            "map_delta_rel_max": self.map_delta_rel_max,
            "map_time_points": self.map_time_points,
            "wigner_points": self.wigner_points,
            "controls": {
                "rtol": self.controls.rtol,
                "atol": self.controls.atol,
                "max_step": self.controls.max_step,
                "max_time": self.controls.max_time,
                "backend": self.controls.backend,
            },
        }


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12e}"
    if isinstance(value, (np.floating,)):
        return f"{float(value):.12e}"
    return str(value)


@dataclass
class SweepTable:
    name: str
    meta: dict
    columns: list[str]
    rows: list[tuple]

    def to_csv_text(self) -> str:
        lines = [f"# {key} = {val}" for key, val in self.meta.items()]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])


@dataclass
class SweepResult:
    kind: str
    spec: SweepSpec
    tables: list[SweepTable]
    grids: list[tuple[str, object, dict]] = field(default_factory=list)

    def table(self, name: str) -> SweepTable:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def write(self, outdir) -> dict:
        os.makedirs(outdir, exist_ok=True)
        entries = []
        for tab in self.tables:
            path = os.path.join(outdir, f"{tab.name}.csv")
            text = tab.to_csv_text()
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            entries.append(_manifest_entry(f"{tab.name}.csv", text))
        for name, grid, meta in self.grids:
            path = os.path.join(outdir, f"{name}.csv")
            text = grid.to_csv_text(meta)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            entries.append(_manifest_entry(f"{name}.csv", text))
        manifest = {
            "kind": self.kind,
            "config": self.spec.resolved(),
            "files": entries,
        }
        text = json.dumps(manifest, indent=1, sort_keys=True)
        with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
        return manifest


def _manifest_entry(name: str, text: str) -> dict:
    blob = text.encode("utf-8")
    return {"name": name, "bytes": len(blob),
            "sha256": hashlib.sha256(blob).hexdigest()}


def _provenance(spec: SweepSpec, **extra) -> dict:
    meta = {}
    for key, val in spec.resolved()["system"].items():
        meta[key] = _fmt(val)
    meta["dim"] = spec.dim
    meta["code_version"] = __version__
    meta.update({k: _fmt(v) if isinstance(v, float) else v for k, v in extra.items()})
    return meta


# --------------------------------------------------------------- spectrum

def spectrum_sweep(spec: SweepSpec) -> SweepResult:
    """Eigenvalue branches over a detuning grid plus the critical-detuning
    curve in the detuning-amplitude plane.

    Branches are tracked by continuity (nearest-neighbor matching to the
    previous grid point) so that their colors stay consistent through the
    coalescence; the first point is labeled by the closed-form assignment.
    """
    params = spec.params
    dlep = lep_detuning(params)
    rels = np.linspace(-spec.delta_rel_max, spec.delta_rel_max, spec.delta_points)
    cat = cat_basis_params(params)

    rows = []
    previous = None
    for rel in rels:
        p = params.replace(delta=rel * dlep)
        ns = numeric_spectrum(effective_liouvillian(p))
        triple = np.array([ns.e2, ns.e3, ns.e4])
        if previous is not None:
            best, best_cost = None, math.inf
            for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0),
                         (2, 0, 1), (2, 1, 0)):
                cost = sum(abs(triple[perm[i]] - previous[i]) for i in range(3))
                if cost < best_cost:
                    best, best_cost = perm, cost
            triple = triple[list(best)]
        previous = triple
        rows.append((
            rel * dlep / TWO_PI, rel,
            triple[0].real / TWO_PI, triple[0].imag / TWO_PI,
            triple[1].real / TWO_PI, triple[1].imag / TWO_PI,
            triple[2].real / TWO_PI, triple[2].imag / TWO_PI,
            int(ns.at_ep),
        ))
    spectrum = SweepTable(
        name="spectrum",
        meta=_provenance(spec, alpha=_fmt(cat.alpha),
                         delta_lep2_hz=_fmt(dlep / TWO_PI)),
        columns=["delta_hz", "delta_rel", "re_e2_hz", "im_e2_hz",
                 "re_e3_hz", "im_e3_hz", "re_e4_hz", "im_e4_hz", "at_ep"],
        rows=rows,
    )

    lep_rows = []
    for alpha in np.linspace(spec.alpha_min, spec.alpha_max, spec.alpha_points):
        p = SystemParams(delta=0.0, kerr=params.kerr,
                         drive=params.kerr * alpha ** 2, kappa=params.kappa,
                         kappa_phi=params.kappa_phi)
        d = lep_detuning(p)
        lep_rows.append((alpha, d / TWO_PI, d / params.kappa))
    lep_curve = SweepTable(
        name="lep_curve",
        meta=_provenance(spec),
        columns=["alpha", "delta_lep2_hz", "delta_lep2_over_kappa"],
        rows=lep_rows,
    )
    return SweepResult(kind="spectrum", spec=spec, tables=[spectrum, lep_curve])


# --------------------------------------------------------------- dynamics

def _bloch_rows(rel, times, qubits, leakages, source):
    rows = []
    for t, mat, leak in zip(times, qubits, leakages):
        x = 2.0 * mat[0, 1].real
        y = -2.0 * mat[0, 1].imag
        z = (mat[0, 0] - mat[1, 1]).real
        rows.append((rel, t * 1e6, x, y, z, leak, source))
    return rows


def _full_groups(spec: SweepSpec, rels, times):
    """Integrate the master equation for all detunings, grouped in fixed
    batches; optionally fanned out to a process pool."""
    params = spec.params
    dlep = lep_detuning(params)
    space = spec.space
    cat = cat_basis_params(params)
    rho0 = FockDensityMatrix.from_state(fock.coherent_state(cat.alpha, space))
    groups = [tuple(rels[i:i + BATCH_GROUP]) for i in range(0, len(rels), BATCH_GROUP)]
    args = [(rho0, [r * dlep for r in group], params, times, spec.controls)
            for group in groups]
    if spec.jobs > 1 and len(groups) > 1:
        # spawn workers: fork would inherit the compiled kernels' thread
        # state mid-flight and can deadlock on result return.  Spawn needs
        # an importable __main__ (CLI and pytest qualify); otherwise fall
        # back to in-process evaluation, which yields identical bytes.
        try:
            ctx = multiprocessing.get_context("spawn")
            with concurrent.futures.ProcessPoolExecutor(max_workers=spec.jobs,
                                                        mp_context=ctx) as pool:
                outputs = list(pool.map(_integrate_group, args))
        except concurrent.futures.process.BrokenProcessPool:
            outputs = [_integrate_group(a) for a in args]
    else:
        outputs = [_integrate_group(a) for a in args]
    states = {}
    for group, out in zip(groups, outputs):
        for b, rel in enumerate(group):
            states[rel] = out[:, b]
    return states


def _integrate_group(arg):
    rho0, deltas, params, times, controls = arg
    return evolve_detuning_batch(rho0, deltas, params, times, controls)


def dynamics_sweep(spec: SweepSpec) -> SweepResult:
    """Bloch traces from both the full master equation and the reduced
    four-mode propagation, plus reduced-model convergence times.

    The initial state is the coherent state |alpha>, i.e. (+X).  The
    convergence table reports the last time the reduced-state trace distance
    to the steady mixture exceeds 1e-3, scanned over a long window.
    """
    params = spec.params
    cat = cat_basis_params(params)
    dlep = lep_detuning(params)
    scale = cat.alpha ** 2 * params.kappa
    times = np.linspace(0.0, spec.time_factor / scale, spec.time_points)
    rels = list(spec.detuning_rels)

    states = _full_groups(spec, rels, times)
    rows = []
    crossings = {}
    for rel in rels:
        qubits, leaks = [], []
        for mat in states[rel]:
            q, leak = project_to_cat_subspace(
                FockDensityMatrix(mat, space=spec.space, trace_tol=1.01e-7,
                                  psd_tol=1e-7), cat)
            qubits.append(q.matrix)
            leaks.append(leak)
        rows.extend(_bloch_rows(rel, times, qubits, leaks, "full"))
        x = np.array([2.0 * q[0, 1].real for q in qubits])
        crossings[("full", rel)] = int(np.count_nonzero(np.diff(np.sign(x))))

    rho0 = initial_qubit_state("coherent_plus", cat)
    for rel in rels:
        p = params.replace(delta=rel * dlep)
        reduced = effective_trajectory(rho0.matrix, p, times)
        rows.extend(_bloch_rows(rel, times, reduced,
                                np.zeros(times.size), "effective"))
        x = 2.0 * reduced[:, 0, 1].real
        crossings[("effective", rel)] = int(np.count_nonzero(np.diff(np.sign(x))))

    meta = _provenance(spec, alpha=_fmt(cat.alpha),
                       delta_lep2_hz=_fmt(dlep / TWO_PI),
                       time_unit="microseconds",
                       initial_state="coherent_plus")
    for (source, rel), count in sorted(crossings.items()):
        meta[f"x_crossings_{source}_{rel:g}"] = count
    table = SweepTable(
        name="dynamics", meta=meta,
        columns=["delta_rel", "t_us", "x", "y", "z", "leakage", "source"],
        rows=rows,
    )
    conv = convergence_table(spec)
    return SweepResult(kind="dynamics", spec=spec, tables=[table, conv])


def convergence_table(spec: SweepSpec, threshold: float = 1e-3,
                      window_factor: float = 400.0,
                      samples: int = 20001) -> SweepTable:
    """Reduced-model time to enter (and stay within) a trace-distance ball
    around the steady mixture, per detuning."""
    params = spec.params
    cat = cat_basis_params(params)
    dlep = lep_detuning(params)
    scale = cat.alpha ** 2 * params.kappa
    times = np.linspace(0.0, window_factor / scale, samples)
    rho0 = initial_qubit_state("coherent_plus", cat)
    target = closed_form_spectrum(params).rho_ss
    rows = []
    for rel in spec.detuning_rels:
        p = params.replace(delta=rel * dlep)
        reduced = effective_trajectory(rho0.matrix, p, times)
        deviation = reduced - target[None, :, :]
        dist = 0.5 * np.abs(np.linalg.eigvalsh(deviation)).sum(axis=1)
        above = np.nonzero(dist >= threshold)[0]
        if above.size == 0:
            t_conv = 0.0
        elif above[-1] + 1 >= times.size:
            t_conv = math.inf
        else:
            t_conv = times[above[-1] + 1]
        rows.append((rel, t_conv * 1e6, t_conv * scale))
    return SweepTable(
        name="convergence",
        meta=_provenance(spec, threshold=_fmt(threshold),
                         metric="trace distance to steady mixture",
                         window_factor=_fmt(window_factor)),
        columns=["delta_rel", "t_converge_us", "t_converge_scaled"],
        rows=rows,
    )


# --------------------------------------------------------------- phase diff

def phase_diff_sweep(spec: SweepSpec) -> SweepResult:
    """Phase difference of the coherence eigenmatrices across the detuning
    grid, from numeric eigenvectors; exact-coalescence points use the merged
    closed-form eigenmatrix.  Undefined phases are marked, never dropped."""
    params = spec.params
    dlep = lep_detuning(params)
    rels = np.linspace(-spec.map_delta_rel_max, spec.map_delta_rel_max,
                       spec.delta_points)
    rows = []
    for rel in rels:
        p = params.replace(delta=rel * dlep)
        spec4 = (closed_form_spectrum(p) if _on_ep(rel)
                 else numeric_spectrum(effective_liouvillian(p)))
        law = math.asin(min(abs(rel), 1.0)) if abs(rel) < 1.0 else math.pi / 2.0
        values = []
        for mat in (spec4.rho3, spec4.rho4):
            try:
                values.append((phase_difference(mat), 1))
            except Exception:
                values.append((math.nan, 0))
        rows.append((rel, rel * dlep / TWO_PI,
                     values[0][0], values[1][0], law,
                     int(spec4.at_ep), values[0][1] and values[1][1]))
    table = SweepTable(
        name="phase_diff",
        meta=_provenance(spec, delta_lep2_hz=_fmt(dlep / TWO_PI)),
        columns=["delta_rel", "delta_hz", "phi_rho3", "phi_rho4",
                 "phi_arcsin_law", "at_ep", "defined"],
        rows=rows,
    )
    return SweepResult(kind="phase_diff", spec=spec, tables=[table])


def _on_ep(rel: float) -> bool:
    return abs(abs(rel) - 1.0) <= 1e-9


# --------------------------------------------------------------- snapshots

def bloch_wigner_snapshots(spec: SweepSpec) -> SweepResult:
    """Full-model Bloch trajectories with phase-space snapshots.

    For each configured detuning the master-equation trajectory is projected
    onto the cat pair for the Bloch table, and the oscillator Wigner function
    is sampled at evenly spaced times across the window.
    """
    params = spec.params
    cat = cat_basis_params(params)
    dlep = lep_detuning(params)
    scale = cat.alpha ** 2 * params.kappa
    times = np.linspace(0.0, spec.time_factor / scale, spec.time_points)
    rels = sorted(spec.snapshot_rels)

    states = _full_groups(spec, rels, times)
    rows = []
    grids = []
    panel_idx = np.unique(np.round(
        np.linspace(0, times.size - 1, spec.snapshot_panels)).astype(int))
    grid_spec = default_grid(cat.alpha, points=spec.wigner_points)
    for rel in rels:
        qubits, leaks = [], []
        for mat in states[rel]:
            q, leak = project_to_cat_subspace(
                FockDensityMatrix(mat, space=spec.space, trace_tol=1.01e-7,
                                  psd_tol=1e-7), cat)
            qubits.append(q.matrix)
            leaks.append(leak)
        rows.extend(_bloch_rows(rel, times, qubits, leaks, "full"))
        for k in panel_idx:
            state = FockDensityMatrix(states[rel][k], space=spec.space,
                                      trace_tol=1.01e-7, psd_tol=1e-7)
            w = wigner(state, grid_spec)
            meta = _provenance(spec, delta_rel=_fmt(float(rel)),
                               t_us=_fmt(times[k] * 1e6),
                               panel=int(np.where(panel_idx == k)[0][0]))
            grids.append((f"wigner_rel{rel:g}_p{int(np.where(panel_idx == k)[0][0])}",
                          w, meta))
    table = SweepTable(
        name="snapshots_trajectory",
        meta=_provenance(spec, alpha=_fmt(cat.alpha),
                         delta_lep2_hz=_fmt(dlep / TWO_PI),
                         time_unit="microseconds",
                         panels=",".join(str(int(i)) for i in panel_idx)),
        columns=["delta_rel", "t_us", "x", "y", "z", "leakage", "source"],
        rows=rows,
    )
    return SweepResult(kind="snapshots", spec=spec, tables=[table], grids=grids)


# --------------------------------------------------------------- fidelity map

def fidelity_map(spec: SweepSpec) -> SweepResult:
    """Uhlmann fidelity between the master-equation state and the reduced
    four-mode state (lifted back to the oscillator) over a detuning-time map.

    Both evolutions start from the same coherent state, so the t = 0 column
    is exactly 1.
    """
    params = spec.params
    cat = cat_basis_params(params)
    dlep = lep_detuning(params)
    scale = cat.alpha ** 2 * params.kappa
    times = np.linspace(0.0, spec.time_factor / scale, spec.map_time_points)
    rels = list(np.linspace(-spec.map_delta_rel_max, spec.map_delta_rel_max,
                            spec.map_delta_points))

    states = _full_groups(spec, rels, times)
    rho0 = initial_qubit_state("coherent_plus", cat)
    space = spec.space
    rows = []
    for rel in rels:
        p = params.replace(delta=rel * dlep)
        reduced = effective_trajectory(rho0.matrix, p, times)
        for i, t in enumerate(times):
            full_state = 0.5 * (states[rel][i] + states[rel][i].conj().T)
            lifted = embed_in_fock(
                _as_qubit(reduced[i]), cat, space)
            f = uhlmann_fidelity(full_state, lifted.matrix)
            rows.append((rel, t * 1e6, f))
    table = SweepTable(
        name="fidelity_map",
        meta=_provenance(spec, alpha=_fmt(cat.alpha),
                         delta_lep2_hz=_fmt(dlep / TWO_PI),
                         time_unit="microseconds",
                         initial_state="coherent_plus"),
        columns=["delta_rel", "t_us", "fidelity"],
        rows=rows,
    )
    return SweepResult(kind="fidelity_map", spec=spec, tables=[table])


def _as_qubit(mat: np.ndarray):
    from .observables import QubitDensityMatrix

    sym = 0.5 * (mat + mat.conj().T)
    return QubitDensityMatrix(sym, herm_tol=1e-9, trace_tol=1e-8, psd_tol=1e-8)
