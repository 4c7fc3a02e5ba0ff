"""State observables: cat-subspace projection, Bloch components, Wigner
functions via displaced parity, Uhlmann fidelity and the coherence
phase-difference order parameter.

Bloch conventions on the cat qubit (|C+> is the north pole):

    z = rho_pp - rho_mm
    x = 2 Re(rho_pm)            so (|C+> + |C->)/sqrt(2) has x = +1
    y = -2 Im(rho_pm)           so (|C+> + i |C->)/sqrt(2) has y = +1

which identifies |+X> with the coherent state |alpha> up to the
exponentially small coherent-state overlap.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import fock
from .errors import InvalidStateError, ProjectionError, UndefinedPhaseError
from .fock import FockDensityMatrix, TruncatedSpace
from .params import CatBasisParams


@dataclass(frozen=True)
class QubitDensityMatrix:
    """Validated 2x2 density matrix in the {|C+>, |C->} basis."""

    matrix: np.ndarray
    herm_tol: float = 1e-10
    trace_tol: float = 1e-9
    psd_tol: float = 1e-9

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        if m.shape != (2, 2):
            raise InvalidStateError(f"qubit density matrix must be 2x2, got {m.shape}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > self.herm_tol:
            raise InvalidStateError(f"not Hermitian: max|M - M^dag| = {herm:.3e}")
        tr = m[0, 0].real + m[1, 1].real
        if abs(tr - 1.0) > self.trace_tol:
            raise InvalidStateError(f"trace {tr!r} deviates from 1 beyond {self.trace_tol:g}")
        det = np.linalg.det(0.5 * (m + m.conj().T)).real
        if det < -self.psd_tol:
            raise InvalidStateError(f"determinant {det:.3e} below -{self.psd_tol:g}")


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)


def bloch(rho: QubitDensityMatrix) -> BlochVector:
    """Bloch components of a cat-qubit state (conventions in module docstring)."""
    m = rho.matrix
    vec = BlochVector(
        x=2.0 * m[0, 1].real,
        y=-2.0 * m[0, 1].imag,
        z=(m[0, 0] - m[1, 1]).real,
    )
    if vec.norm > 1.0 + 1e-8:
        raise InvalidStateError(f"Bloch norm {vec.norm!r} exceeds 1 beyond tolerance")
    return vec


def cat_pair(catp: CatBasisParams, space: TruncatedSpace) -> np.ndarray:
    """The (2, dim) array of cat basis vectors [|C+>, |C->]."""
    return np.stack([
        fock.cat_state(catp.alpha, +1, space),
        fock.cat_state(catp.alpha, -1, space),
    ])


def project_to_cat_subspace(rho: FockDensityMatrix, cat: CatBasisParams,
                            max_leakage: float = 0.5) -> tuple[QubitDensityMatrix, float]:
    """Compress an oscillator state onto the cat pair.

    Returns the renormalized 2x2 block <C_i|rho|C_j> together with the
    leakage 1 - (rho_pp + rho_mm), i.e. the weight living outside the
    encoded subspace.  Leakage beyond ``max_leakage`` aborts: the projected
    qubit would say little about the oscillator state.
    """
    basis = cat_pair(cat, rho.space)
    block = basis.conj() @ rho.matrix @ basis.T
    inside = (block[0, 0] + block[1, 1]).real
    leakage = 1.0 - inside
    if leakage > max_leakage:
        raise ProjectionError(
            f"leakage {leakage:.3f} exceeds {max_leakage}; projection unreliable")
    block = 0.5 * (block + block.conj().T) / inside
    return QubitDensityMatrix(block, herm_tol=1e-9), leakage


def embed_in_fock(rho: QubitDensityMatrix, cat: CatBasisParams,
                  space: TruncatedSpace) -> FockDensityMatrix:
    """Lift a cat-basis qubit state to the oscillator: sum_ij rho_ij |C_i><C_j|."""
    basis = cat_pair(cat, space)
    mat = basis.T @ rho.matrix @ basis.conj()
    mat = 0.5 * (mat + mat.conj().T)
    return FockDensityMatrix(mat, herm_tol=1e-9, trace_tol=1e-8, psd_tol=1e-8)


@dataclass(frozen=True)
class GridSpec:
    """Square phase-space grid: x in [-halfwidth, halfwidth], same for p."""

    halfwidth: float
    points: int = 201

    def __post_init__(self):
        if self.halfwidth <= 0.0 or self.points < 2:
            raise ValueError("grid needs positive halfwidth and at least 2 points")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.halfwidth, self.halfwidth, self.points)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(-self.halfwidth, self.halfwidth, self.points)


def default_grid(alpha: float, points: int = 201) -> GridSpec:
    """Covers both coherent lobes at +-alpha plus interference structure."""
    return GridSpec(halfwidth=alpha + 4.0, points=points)


@dataclass(frozen=True)
class WignerGrid:
    """Sampled Wigner function W(x + i p) on a rectangular grid.

    ``values[i, j]`` is W at p = p[i], x = x[j].  A proper state integrates
    to 1; ``integral()`` uses the plain Riemann sum that the normalization
    invariant is stated against.
    """

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(np.sum(self.values) * dx * dp)

    def min(self) -> float:
        return float(np.min(self.values))

    def to_csv(self, path, metadata: dict | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text(metadata))

    def to_csv_text(self, metadata: dict | None = None) -> str:
        buf = io.StringIO()
        for key, val in (metadata or {}).items():
            buf.write(f"# {key} = {val}\n")
        buf.write(f"# nx = {self.x.size}\n# np = {self.p.size}\n")
        buf.write("x,p,w\n")
        for i in range(self.p.size):
            for j in range(self.x.size):
                buf.write(f"{self.x[j]:.12e},{self.p[i]:.12e},{self.values[i, j]:.12e}\n")
        return buf.getvalue()

    def to_json_dict(self, metadata: dict | None = None) -> dict:
        return {
            "metadata": dict(metadata or {}),
            "x": [float(v) for v in self.x],
            "p": [float(v) for v in self.p],
            "values": [[float(v) for v in row] for row in self.values],
        }

    def to_json(self, path, metadata: dict | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(metadata), fh, indent=1, sort_keys=True)


def wigner(rho: FockDensityMatrix, grid: GridSpec,
           tail_tol: float = 1e-8, imag_tol: float = 1e-10) -> WignerGrid:
    """W(beta) = (2/pi) Tr[D(-beta) rho D(beta) exp(i pi n)] on a grid.

    Accuracy is limited by the truncation tail of ``rho`` itself (the
    displacement matrix elements are exact); a warning fires when the state
    carries visible weight on the top Fock levels.  The imaginary residue of
    the trace must stay below ``imag_tol`` for a Hermitian input and is then
    discarded.
    """
    pops = np.diag(rho.matrix).real
    edge = float(np.sum(pops[-3:]))
    if edge > tail_tol:
        warnings.warn(
            f"state carries weight {edge:.2e} on the top Fock levels; "
            "Wigner values are truncation-limited", stacklevel=2)
    xs, ps = grid.x, grid.p
    bx, bp = np.meshgrid(xs, ps)
    betas = (bx + 1j * bp).ravel()
    raw = fock.displaced_parity_expectation(rho.matrix, betas)
    resid = float(np.max(np.abs(raw.imag)))
    if resid > imag_tol:
        raise InvalidStateError(f"Wigner imaginary residue {resid:.3e} exceeds {imag_tol:g}")
    vals = (2.0 / math.pi) * raw.real.reshape(ps.size, xs.size)
    return WignerGrid(x=xs, p=ps, values=vals)


def uhlmann_fidelity(rho: np.ndarray | FockDensityMatrix,
                     sigma: np.ndarray | FockDensityMatrix,
                     neg_tol: float = 1e-7) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    Computed as the squared trace norm of sqrt(sigma) sqrt(rho) via singular
    values, which is symmetric in the arguments by construction.  Eigenvalues
    below ``-neg_tol`` are rejected; small negatives from rounding are
    clamped to zero.
    """
    a = rho.matrix if isinstance(rho, FockDensityMatrix) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, FockDensityMatrix) else np.asarray(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    roots = []
    for m in (a, b):
        vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
        if vals.min() < -neg_tol:
            raise InvalidStateError(
                f"eigenvalue {vals.min():.3e} below -{neg_tol:g}; not a state")
        vals = np.clip(vals, 0.0, None)
        roots.append((vecs * np.sqrt(vals)) @ vecs.conj().T)
    sv = np.linalg.svd(roots[1] @ roots[0], compute_uv=False)
    f = float(np.sum(sv) ** 2)
    return min(f, 1.0) if f < 1.0 + 1e-9 else f


def phase_difference(mat: np.ndarray, floor: float = 1e-12) -> float:
    """|arg(m_01) - arg(m_10)| wrapped into [0, pi].

    Defined for any 2x2 complex matrix with non-vanishing off-diagonals; in
    practice applied to coherence eigenmatrices, where it jumps from
    arcsin(|detuning| / critical detuning) to pi/2 across the exceptional
    point.  Invariant under any global phase of the input.
    """
    m = np.asarray(mat, dtype=np.complex128)
    if m.shape != (2, 2):
        raise ValueError(f"need a 2x2 matrix, got {m.shape}")
    if abs(m[0, 1]) <= floor or abs(m[1, 0]) <= floor:
        raise UndefinedPhaseError(
            f"off-diagonal magnitudes {abs(m[0, 1]):.2e}, {abs(m[1, 0]):.2e} "
            f"below {floor:g}; phase difference undefined")
    phi = abs(math.atan2(m[0, 1].imag, m[0, 1].real)
              - math.atan2(m[1, 0].imag, m[1, 0].real))
    if phi > math.pi:
        phi = 2.0 * math.pi - phi
    return phi
