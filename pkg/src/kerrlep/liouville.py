"""Reduced dynamics of the cat-qubit pair: the 4x4 generator in the
vectorized cat basis, its closed-form spectrum, the exceptional-point
detuning, and spectral-decomposition time evolution.

Basis ordering
--------------
Density matrices on span{|C+>, |C->} are vectorized as

    vec(rho) = (rho_pp, rho_pm, rho_mp, rho_mm)

with p/m indexing the even/odd cat states.  In this ordering the decay
eigenmatrix is the ray through (-1, 0, 0, 1) and the coalesced eigenmatrix at
the second-order exceptional point is the ray through (0, i, 1, 0).

Generator structure (kappa-loss + dephasing, alpha^2 = P/K):

    row pp:  -a2 k p^2 rho_pp + a2 k p^-2 rho_mm
    row pm:  [a2 (-k/2 p2+ + i D p2-) + L_phi] rho_pm + a2 k rho_mp
    row mp:  [a2 (-k/2 p2+ - i D p2-) + L_phi] rho_mp + a2 k rho_pm
    row mm:  +a2 k p^2 rho_pp - a2 k p^-2 rho_mm

The populations and coherences decouple; the coherence block carries the
exceptional point at |D| = kappa / p2-.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import NoExceptionalPointError, NumericFailureError
from .observables import QubitDensityMatrix
from .params import CatBasisParams, SystemParams, cat_basis_params

#: documented eigenmatrix gauge
GAUGE_CONVENTION = ("largest-magnitude entry scaled to 1 and made real positive, "
                    "ties broken in row-major order; steady state scaled to unit trace")

#: relative detuning distance below which a point counts as sitting on the EP
EP_REL_TOL = 1e-9


def vec_qubit(mat: np.ndarray) -> np.ndarray:
    """Flatten a 2x2 cat-basis matrix into the fixed (pp, pm, mp, mm) order."""
    m = np.asarray(mat, dtype=np.complex128)
    return np.array([m[0, 0], m[0, 1], m[1, 0], m[1, 1]])


def unvec_qubit(v: np.ndarray) -> np.ndarray:
    """Inverse of ``vec_qubit``."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    return np.array([[v[0], v[1]], [v[2], v[3]]])


@dataclass(frozen=True)
class EffectiveLiouvillian:
    """The 4x4 generator together with the parameters that produced it."""

    matrix: np.ndarray
    params: SystemParams
    cat: CatBasisParams


def effective_liouvillian(params: SystemParams) -> EffectiveLiouvillian:
    """Assemble the 4x4 cat-basis generator for the given parameters."""
    cat = cat_basis_params(params)
    a2 = cat.alpha ** 2
    k = params.kappa
    p2 = cat.p ** 2
    m = np.zeros((4, 4), dtype=np.complex128)
    m[0, 0] = -a2 * k * p2
    m[0, 3] = a2 * k / p2
    m[1, 1] = a2 * (-0.5 * k * cat.p2_plus + 1j * params.delta * cat.p2_minus) + cat.l_phi
    m[1, 2] = a2 * k
    m[2, 1] = a2 * k
    m[2, 2] = a2 * (-0.5 * k * cat.p2_plus - 1j * params.delta * cat.p2_minus) + cat.l_phi
    m[3, 0] = a2 * k * p2
    m[3, 3] = -a2 * k / p2
    return EffectiveLiouvillian(matrix=m, params=params, cat=cat)


def lep_detuning(params: SystemParams) -> float:
    """Critical detuning kappa / p2- at which the coherence pair coalesces.

    Equals kappa (1 - e^2) / (4 e) with e = exp(-2 alpha^2); grows like
    (kappa/4) e^{2 alpha^2} for large cat amplitude.  Independent of
    kappa_phi.  Raises when kappa = 0: without loss the coherence eigenvalues
    are purely imaginary for every detuning and never coalesce.
    """
    if params.kappa <= 0.0:
        raise NoExceptionalPointError(
            "kappa = 0 gives a purely imaginary coherence spectrum; "
            "no detuning-driven coalescence exists")
    cat = cat_basis_params(params)
    return params.kappa / cat.p2_minus


@dataclass(frozen=True)
class LiouvillianSpectrum:
    """Labeled eigenvalues and gauge-fixed eigenmatrices of the 4x4 generator.

    e1 is the steady eigenvalue (0), e2 the population-decay rate, e3/e4 the
    coherence pair.  Below the exceptional point all four are real; above it
    e3/e4 form a conjugate pair with Im(e3) <= 0 <= Im(e4).  On the real side
    the labels follow the principal square root, which puts the slowly
    decaying coherence branch in e3: Re(e4) <= e2/2 + L_phi <= Re(e3).
    """

    e1: complex
    e2: complex
    e3: complex
    e4: complex
    rho_ss: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray
    rho4: np.ndarray
    at_ep: bool
    gauge: str = GAUGE_CONVENTION

    @property
    def eigenvalues(self) -> list[complex]:
        return [self.e1, self.e2, self.e3, self.e4]

    @property
    def eigenmatrices(self) -> list[np.ndarray]:
        return [self.rho_ss, self.rho2, self.rho3, self.rho4]


def gauge_fix(mat: np.ndarray, tie_rel: float = 1e-9) -> np.ndarray:
    """Scale a matrix so its largest-magnitude entry is exactly 1 (real).

    Entries within a relative ``tie_rel`` of the maximum count as tied and
    the first of them in row-major order wins.  The tolerance matters: below
    the exceptional point the coherence eigenvectors have exactly unimodular
    entry ratios, so bit-level noise would otherwise flip the pivot between
    runs.  Observables built from |entries| or argument differences are
    unaffected by the choice.
    """
    m = np.asarray(mat, dtype=np.complex128)
    mags = np.abs(m).ravel()
    top = float(mags.max())
    if top == 0.0:
        raise ValueError("cannot gauge-fix the zero matrix")
    idx = int(np.argmax(mags >= (1.0 - tie_rel) * top))
    return m / m.ravel()[idx]


def _is_at_ep(params: SystemParams) -> bool:
    if params.kappa <= 0.0:
        return False
    dl = lep_detuning(params)
    return abs(abs(params.delta) - dl) <= EP_REL_TOL * dl


def closed_form_spectrum(params: SystemParams) -> LiouvillianSpectrum:
    """Exact eigensystem of the 4x4 generator.

    Populations: e1 = 0 with the unit-trace mixture rho_ss propto
    diag(p^-2, p^2); e2 = -kappa alpha^2 p2+ with eigenmatrix diag(1, -1).
    Coherences: e3/e4 = e2/2 + L_phi -/+ i alpha^2 sqrt((D p2-)^2 - kappa^2)
    with the principal branch of the square root, eigenvectors
    (kappa, lambda/alpha^2 - i D p2-) in the (pm, mp) plane.
    """
    cat = cat_basis_params(params)
    a2 = cat.alpha ** 2
    k = params.kappa
    delta_tilde = params.delta * cat.p2_minus        # coherence-sector detuning
    e2 = -k * a2 * cat.p2_plus
    center = 0.5 * e2 + cat.l_phi
    w = np.sqrt(np.complex128(delta_tilde ** 2 - k ** 2))
    e3 = center - 1j * a2 * w
    e4 = center + 1j * a2 * w

    p2 = cat.p ** 2
    rho_ss = np.diag([1.0 / p2, p2]).astype(np.complex128) / cat.p2_plus
    rho2 = gauge_fix(np.diag([-1.0, 1.0]))

    # reduced coherence block [[i dt, k], [k, -i dt]] (units of alpha^2)
    lam3 = -1j * w
    lam4 = +1j * w
    if k > 0.0:
        v3 = np.array([k, lam3 - 1j * delta_tilde])
        v4 = np.array([k, lam4 - 1j * delta_tilde])
    else:
        # block is diagonal; eigenvectors are the basis coherences
        v3 = np.array([1.0, 0.0]) if abs(lam3 - 1j * delta_tilde) < abs(lam3 + 1j * delta_tilde) \
            else np.array([0.0, 1.0])
        v4 = np.array([0.0, 1.0]) if v3[0] == 1.0 else np.array([1.0, 0.0])
    rho3 = gauge_fix(np.array([[0.0, v3[0]], [v3[1], 0.0]]))
    rho4 = gauge_fix(np.array([[0.0, v4[0]], [v4[1], 0.0]]))

    return LiouvillianSpectrum(
        e1=0.0 + 0.0j, e2=complex(e2), e3=complex(e3), e4=complex(e4),
        rho_ss=rho_ss, rho2=rho2, rho3=rho3, rho4=rho4,
        at_ep=_is_at_ep(params))


def numeric_spectrum(liouvillian: EffectiveLiouvillian) -> LiouvillianSpectrum:
    """Dense eigendecomposition of the 4x4 generator, labeled by proximity
    to the closed-form eigenvalues and put in the same gauge.

    Serves as the independent oracle for ``closed_form_spectrum``; the two
    must agree away from the exceptional point, where the eigenbasis is well
    conditioned.
    """
    m = liouvillian.matrix
    if not np.all(np.isfinite(m)):
        raise NumericFailureError("generator contains non-finite entries")
    try:
        vals, vecs = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"eigensolver failed: {exc}") from exc

    ref = closed_form_spectrum(liouvillian.params)
    targets = np.array(ref.eigenvalues)
    best_perm, best_cost = None, math.inf
    for perm in itertools.permutations(range(4)):
        cost = sum(abs(vals[perm[i]] - targets[i]) for i in range(4))
        if cost < best_cost:
            best_cost, best_perm = cost, perm

    ordered_vals = [vals[best_perm[i]] for i in range(4)]
    ordered_mats = []
    for i in range(4):
        mat = unvec_qubit(vecs[:, best_perm[i]])
        if i == 0:
            tr = np.trace(mat)
            if abs(tr) < 1e-12:
                raise NumericFailureError("steady eigenvector has vanishing trace")
            mat = mat / tr
        else:
            mat = gauge_fix(mat)
        ordered_mats.append(mat)

    return LiouvillianSpectrum(
        e1=complex(ordered_vals[0]), e2=complex(ordered_vals[1]),
        e3=complex(ordered_vals[2]), e4=complex(ordered_vals[3]),
        rho_ss=ordered_mats[0], rho2=ordered_mats[1],
        rho3=ordered_mats[2], rho4=ordered_mats[3],
        at_ep=_is_at_ep(liouvillian.params))


_INITIAL_KINDS = ("coherent_plus", "cat_plus", "cat_minus", "y_plus")


def initial_qubit_state(kind: str, cat: CatBasisParams) -> QubitDensityMatrix:
    """Standard initial states expressed in the cat basis.

    coherent_plus uses the exact expansion
    |alpha> = |C+>/(2 N+) + |C->/(2 N-), whose amplitudes are normalized by
    construction: (1/(2 N+))^2 + (1/(2 N-))^2 = 1.
    """
    if kind == "coherent_plus":
        amps = np.array([1.0 / (2.0 * cat.norm_plus), 1.0 / (2.0 * cat.norm_minus)],
                        dtype=np.complex128)
    elif kind == "cat_plus":
        amps = np.array([1.0, 0.0], dtype=np.complex128)
    elif kind == "cat_minus":
        amps = np.array([0.0, 1.0], dtype=np.complex128)
    elif kind == "y_plus":
        amps = np.array([1.0, 1.0j], dtype=np.complex128) / math.sqrt(2.0)
    else:
        raise ValueError(f"unknown initial state {kind!r}; choose from {_INITIAL_KINDS}")
    return QubitDensityMatrix(np.outer(amps, amps.conj()))


def effective_trajectory(rho0: np.ndarray, params: SystemParams,
                         times: np.ndarray, ep_rel_switch: float = 1e-6) -> np.ndarray:
    """Propagate a 2x2 cat-basis matrix; returns raw (len(times), 2, 2).

    Away from the exceptional point the evolution is the four-mode spectral
    sum with coefficients from one 4x4 linear solve.  Within a relative
    detuning distance ``ep_rel_switch`` of the critical point the eigenbasis
    is near-singular and the propagator switches to a direct matrix
    exponential of t * L, which also captures the t e^{lambda t} secular term
    exactly at the coalescence.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.size and (times[0] < 0.0 or np.any(np.diff(times) < 0.0)):
        raise ValueError("times must be non-negative and non-decreasing")
    lv = effective_liouvillian(params)
    v0 = vec_qubit(rho0)

    near_ep = False
    if params.kappa > 0.0:
        dl = lep_detuning(params)
        near_ep = abs(abs(params.delta) - dl) <= ep_rel_switch * dl

    out = np.empty((times.size, 2, 2), dtype=np.complex128)
    if near_ep:
        diffs = np.diff(times)
        uniform = diffs.size > 0 and np.allclose(diffs, diffs[0], rtol=1e-10, atol=0.0)
        if uniform:
            # one exponential per run; stepping reproduces expm(L k dt)
            # exactly (including the secular t e^{lambda t} growth) up to
            # linear rounding accumulation
            v = expm(lv.matrix * times[0]) @ v0 if times[0] > 0.0 else v0.copy()
            out[0] = unvec_qubit(v)
            prop = expm(lv.matrix * diffs[0])
            for i in range(1, times.size):
                v = prop @ v
                out[i] = unvec_qubit(v)
        else:
            for i, t in enumerate(times):
                out[i] = unvec_qubit(expm(lv.matrix * t) @ v0)
    else:
        spec = closed_form_spectrum(params)
        basis = np.column_stack([vec_qubit(m) for m in spec.eigenmatrices])
        try:
            coeff = np.linalg.solve(basis, v0)
        except np.linalg.LinAlgError as exc:
            raise NumericFailureError(f"eigenbasis solve failed: {exc}") from exc
        evals = np.array(spec.eigenvalues)
        phases = np.exp(np.outer(times, evals))          # (T, 4)
        modes = np.stack(spec.eigenmatrices)             # (4, 2, 2)
        out = np.einsum("tk,k,kij->tij", phases, coeff, modes)
    # symmetrize away rounding; the generator preserves Hermiticity exactly
    return 0.5 * (out + np.conj(np.transpose(out, (0, 2, 1))))


def effective_evolve(rho0: QubitDensityMatrix, params: SystemParams,
                     times, ep_rel_switch: float = 1e-6) -> list[QubitDensityMatrix]:
    """Validated wrapper around ``effective_trajectory``.

    The input must already satisfy the density-matrix invariants (the
    QubitDensityMatrix constructor raises otherwise); every returned sample
    is re-validated at slightly looser tolerances that allow for rounding
    accumulated in the propagator.
    """
    raw = effective_trajectory(rho0.matrix, params, np.asarray(times, dtype=np.float64),
                               ep_rel_switch=ep_rel_switch)
    return [QubitDensityMatrix(raw[i], herm_tol=1e-9, trace_tol=1e-9, psd_tol=1e-9)
            for i in range(raw.shape[0])]


def steady_state_qubit(params: SystemParams) -> QubitDensityMatrix:
    """Closed-form steady mixture diag(p^-2, p^2) / p2+ as a validated state."""
    spec = closed_form_spectrum(params)
    return QubitDensityMatrix(spec.rho_ss)
