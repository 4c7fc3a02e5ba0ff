"""Truncated-Fock-space toolkit: ladder operators, coherent/cat states,
closed-form displacement matrices and the displaced-parity machinery.

Everything here is dense complex linear algebra on a space of ``dim`` Fock
levels n = 0 .. dim-1.  Operators are plain complex ndarrays of shape
(dim, dim); pure states are complex vectors of length dim.  Constructors are
pure functions and the returned arrays are never mutated by this package, so
results can be shared freely across threads.

Displacement matrices use the closed-form associated-Laguerre expression for
<m|D(beta)|n> rather than a matrix exponential: the closed form gives the
exact infinite-dimensional matrix elements restricted to the truncated block,
which keeps the displaced-parity trace accurate for any state supported well
inside the truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpaceError, InvalidStateError, TruncationError
from .params import SystemParams

#: tail-weight bound used by the state constructors
STATE_TAIL_TOL = 1e-12
#: edge-amplitude bound used by the displacement constructor
DISPLACEMENT_EDGE_TOL = 1e-10


@dataclass(frozen=True)
class TruncatedSpace:
    """Fock space truncated to levels n = 0 .. dim-1."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 2:
            raise InvalidSpaceError(f"truncated space needs dim >= 2, got {self.dim!r}")


def annihilation(space: TruncatedSpace) -> np.ndarray:
    """Ladder-down operator a with <n-1|a|n> = sqrt(n)."""
    d = space.dim
    a = np.zeros((d, d), dtype=np.complex128)
    ns = np.arange(1, d)
    a[ns - 1, ns] = np.sqrt(ns)
    return a


def creation(space: TruncatedSpace) -> np.ndarray:
    """Ladder-up operator a^dag (conjugate transpose of ``annihilation``)."""
    return annihilation(space).conj().T


def number_operator(space: TruncatedSpace) -> np.ndarray:
    """Photon-number operator a^dag a (diagonal 0..dim-1)."""
    return np.diag(np.arange(space.dim, dtype=np.float64)).astype(np.complex128)


def parity_operator(space: TruncatedSpace) -> np.ndarray:
    """Photon-number parity exp(i pi a^dag a) = diag((-1)^n)."""
    signs = np.where(np.arange(space.dim) % 2 == 0, 1.0, -1.0)
    return np.diag(signs).astype(np.complex128)


def coherent_tail(alpha: float, dim: int) -> float:
    """Poisson weight sum_{n >= dim} e^{-a^2} a^{2n} / n! beyond the truncation."""
    mean = alpha * alpha
    if mean == 0.0:
        return 0.0
    total = 0.0
    log_mean = math.log(mean)
    for n in range(dim, dim + 4000):
        log_term = -mean + n * log_mean - math.lgamma(n + 1)
        term = math.exp(log_term) if log_term > -745.0 else 0.0
        total += term
        if term < 1e-30 and n > mean:
            break
    return total


def required_dim(alpha: float, tail_tol: float = STATE_TAIL_TOL) -> int:
    """Smallest dim whose coherent tail weight is below ``tail_tol``."""
    d = max(2, int(math.ceil(alpha * alpha)) + 1)
    while coherent_tail(alpha, d) >= tail_tol:
        d += 1
    return d


def _coherent_components(alpha: float, dim: int) -> np.ndarray:
    # e^{-a^2/2} a^n / sqrt(n!); stable via logs for large n
    if alpha == 0.0:
        v = np.zeros(dim)
        v[0] = 1.0
        return v
    n = np.arange(dim, dtype=np.float64)
    sign = np.where(n % 2 == 0, 1.0, np.sign(alpha))
    log_abs = -0.5 * alpha * alpha + n * math.log(abs(alpha)) - \
        np.array([math.lgamma(k + 1) for k in range(dim)]) * 0.5
    return sign * np.exp(log_abs)


def coherent_state(alpha: float, space: TruncatedSpace) -> np.ndarray:
    """Truncated coherent state |alpha> (real amplitude), renormalized.

    Raises TruncationError carrying the required dimension when the Poisson
    tail beyond the truncation exceeds 1e-12.
    """
    tail = coherent_tail(alpha, space.dim)
    if tail >= STATE_TAIL_TOL:
        need = required_dim(alpha)
        raise TruncationError(
            f"coherent tail {tail:.3e} at dim={space.dim} exceeds {STATE_TAIL_TOL:g}; "
            f"need dim >= {need}", required_dim=need)
    v = _coherent_components(alpha, space.dim).astype(np.complex128)
    return v / np.linalg.norm(v)


def cat_state(alpha: float, parity: int, space: TruncatedSpace) -> np.ndarray:
    """Even (parity=+1) or odd (parity=-1) cat state of real amplitude alpha.

    Built directly from the even/odd Poisson components so the two parities
    have exactly disjoint Fock support and <C+|C-> = 0 to the last bit.
    """
    if parity not in (+1, -1):
        raise ValueError(f"parity must be +1 or -1, got {parity!r}")
    if alpha <= 0.0:
        raise ValueError("cat states need alpha > 0")
    tail = coherent_tail(alpha, space.dim)
    if tail >= STATE_TAIL_TOL:
        need = required_dim(alpha)
        raise TruncationError(
            f"coherent tail {tail:.3e} at dim={space.dim} exceeds {STATE_TAIL_TOL:g}; "
            f"need dim >= {need}", required_dim=need)
    v = _coherent_components(alpha, space.dim).astype(np.complex128)
    keep = np.arange(space.dim) % 2 == (0 if parity == +1 else 1)
    v[~keep] = 0.0
    return v / np.linalg.norm(v)


def _displacement_tensor(betas: np.ndarray, dim: int) -> np.ndarray:
    """Exact matrix elements <m|D(beta)|n> for a batch of displacements.

    Returns shape (len(betas), dim, dim).  Uses the associated-Laguerre
    closed form with the standard three-term recurrence in the degree.
    """
    betas = np.asarray(betas, dtype=np.complex128).ravel()
    x = (betas.real ** 2 + betas.imag ** 2)          # |beta|^2
    pref = np.exp(-0.5 * x)
    out = np.zeros((betas.size, dim, dim), dtype=np.complex128)

    beta_pow = np.ones_like(betas)                    # beta^k
    mbconj_pow = np.ones_like(betas)                  # (-conj(beta))^k
    for k in range(dim):
        nmax = dim - k
        # sqrt(n!/(n+k)!) for n = 0..nmax-1
        ratio = np.empty(nmax)
        ratio[0] = math.exp(-0.5 * math.lgamma(k + 1))
        for n in range(1, nmax):
            ratio[n] = ratio[n - 1] * math.sqrt(n / (n + k))
        lag_prev = np.ones_like(x)                    # L_0^{(k)}
        for n in range(nmax):
            if n == 0:
                lag = lag_prev
            elif n == 1:
                lag = 1.0 + k - x
            else:
                lag = ((2 * n - 1 + k - x) * lag_prev - (n - 1 + k) * lag_prev2) / n
            if n >= 1:
                lag_prev2, lag_prev = lag_prev, lag
            upper = ratio[n] * pref * lag
            out[:, n + k, n] = upper * beta_pow
            if k > 0:
                out[:, n, n + k] = upper * mbconj_pow
        beta_pow = beta_pow * betas
        mbconj_pow = mbconj_pow * (-betas.conj())
    return out


def displacement(beta: complex, space: TruncatedSpace) -> np.ndarray:
    """Displacement operator D(beta) = exp(beta a^dag - conj(beta) a).

    Matrix elements come from the closed-form Laguerre expression; D(0) is
    the exact identity and D(-beta) = D(beta)^dag holds to rounding.  Raises
    TruncationError when the |0> -> |dim-1> amplitude is not negligible,
    i.e. the displaced vacuum would hit the truncation edge.
    """
    d = space.dim
    edge = _edge_amplitude(abs(beta), d)
    if edge >= DISPLACEMENT_EDGE_TOL:
        need = d
        while _edge_amplitude(abs(beta), need) >= DISPLACEMENT_EDGE_TOL:
            need += 1
            if need > 100000:  # pragma: no cover - defensive
                raise TruncationError("displacement amplitude unreasonably large")
        raise TruncationError(
            f"|<dim-1|D(beta)|0>| = {edge:.3e} at dim={d} exceeds "
            f"{DISPLACEMENT_EDGE_TOL:g}; need dim >= {need}", required_dim=need)
    return _displacement_tensor(np.array([beta]), d)[0]


def _edge_amplitude(babs: float, dim: int) -> float:
    if babs == 0.0:
        return 0.0
    log_amp = -0.5 * babs * babs + (dim - 1) * math.log(babs) - 0.5 * math.lgamma(dim)
    return math.exp(log_amp) if log_amp > -745.0 else 0.0


def displaced_parity_expectation(rho: np.ndarray, betas: np.ndarray,
                                 chunk: int = 1024) -> np.ndarray:
    """Tr[D(-beta) rho D(beta) exp(i pi n)] for an array of phase-space points.

    Uses the operator identity D(beta) Pi D(-beta) = D(2 beta) Pi, so each
    point costs one closed-form displacement tensor contraction.  Truncation
    error is governed purely by the tail weight of ``rho`` itself: the
    Laguerre matrix elements are exact, so the missing terms of the trace are
    those involving Fock levels >= dim, whose weight in rho is what matters.
    Returns complex values; callers decide how to treat the imaginary residue.
    """
    betas = np.asarray(betas, dtype=np.complex128).ravel()
    dim = rho.shape[0]
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    weighted = signs[:, None] * rho                   # (-1)^n rho[n, m]
    out = np.empty(betas.size, dtype=np.complex128)
    for start in range(0, betas.size, chunk):
        sl = slice(start, min(start + chunk, betas.size))
        tensor = _displacement_tensor(2.0 * betas[sl], dim)
        out[sl] = np.einsum("cmn,nm->c", tensor, weighted)
    return out


def hamiltonian(params: SystemParams, space: TruncatedSpace) -> np.ndarray:
    """Rotating-frame Kerr Hamiltonian with two-photon drive.

    H = delta a^dag a + K a^dag^2 a^2 - P (a^dag^2 + a^2)

    The relative sign between the Kerr and drive terms is fixed so that the
    coherent states |+alpha> and |-alpha> with real alpha = sqrt(P/K) are the
    exact degenerate eigenstates at delta = 0 (eigenvalue -K alpha^4), which
    is the frame in which the cat-basis construction lives.
    """
    d = space.dim
    n = np.arange(d, dtype=np.float64)
    h = np.diag(params.delta * n + params.kerr * n * (n - 1)).astype(np.complex128)
    pair = params.drive * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    idx = np.arange(d - 2)
    h[idx + 2, idx] -= pair
    h[idx, idx + 2] -= pair
    return h


@dataclass(frozen=True)
class FockDensityMatrix:
    """Validated density matrix on a truncated Fock space.

    Invariants enforced at construction: Hermitian within ``herm_tol``
    (absolute), unit trace within ``trace_tol``, smallest eigenvalue above
    ``-psd_tol``.
    """

    matrix: np.ndarray
    space: TruncatedSpace = field(default=None)  # type: ignore[assignment]
    herm_tol: float = 1e-10
    trace_tol: float = 1e-8
    psd_tol: float = 1e-8

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got {m.shape}")
        if self.space is None:
            object.__setattr__(self, "space", TruncatedSpace(m.shape[0]))
        elif self.space.dim != m.shape[0]:
            raise InvalidStateError("space dimension does not match matrix shape")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > self.herm_tol:
            raise InvalidStateError(f"not Hermitian: max|M - M^dag| = {herm:.3e}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > self.trace_tol:
            raise InvalidStateError(f"trace {tr!r} deviates from 1 beyond {self.trace_tol:g}")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if lo < -self.psd_tol:
            raise InvalidStateError(f"negative eigenvalue {lo:.3e} below -{self.psd_tol:g}")

    @classmethod
    def from_state(cls, state: np.ndarray, **tols) -> "FockDensityMatrix":
        v = np.asarray(state, dtype=np.complex128).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), **tols)

    @property
    def dim(self) -> int:
        return self.space.dim
