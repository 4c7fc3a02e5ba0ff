"""Physical parameters of the driven Kerr resonator and derived cat-basis numbers.

All rates and frequencies are stored as angular quantities (rad/s).  File and
CLI interfaces convert to/from ordinary frequencies f = omega / 2pi, so that a
"10 kHz" loss rate in the literature sense enters here as 2*pi*1e4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemParams:
    """Knobs of the two-photon-driven Kerr resonator with loss and dephasing.

    delta      -- drive-resonator detuning (rad/s), may be any sign
    kerr       -- Kerr coefficient K > 0 (rad/s)
    drive      -- two-photon drive amplitude P > 0 (rad/s)
    kappa      -- single-photon loss rate >= 0 (rad/s)
    kappa_phi  -- pure dephasing rate >= 0 (rad/s)
    """

    delta: float
    kerr: float
    drive: float
    kappa: float
    kappa_phi: float = 0.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError(problems)

    def violations(self) -> list[str]:
        out = []
        for name in ("delta", "kerr", "drive", "kappa", "kappa_phi"):
            if not math.isfinite(getattr(self, name)):
                out.append(f"{name} must be finite")
        if self.kerr <= 0.0:
            out.append("kerr must be > 0")
        if self.drive <= 0.0:
            out.append("drive must be > 0")
        if self.kappa < 0.0:
            out.append("kappa must be >= 0")
        if self.kappa_phi < 0.0:
            out.append("kappa_phi must be >= 0")
        return out

    @classmethod
    def from_frequencies(cls, delta_hz: float, kerr_hz: float, drive_hz: float,
                         kappa_hz: float, kappa_phi_hz: float = 0.0) -> "SystemParams":
        """Build from plain frequencies (Hz); multiplies every field by 2*pi."""
        return cls(
            delta=TWO_PI * delta_hz,
            kerr=TWO_PI * kerr_hz,
            drive=TWO_PI * drive_hz,
            kappa=TWO_PI * kappa_hz,
            kappa_phi=TWO_PI * kappa_phi_hz,
        )

    def replace(self, **kwargs) -> "SystemParams":
        fields = dict(delta=self.delta, kerr=self.kerr, drive=self.drive,
                      kappa=self.kappa, kappa_phi=self.kappa_phi)
        fields.update(kwargs)
        return SystemParams(**fields)

    @property
    def alpha(self) -> float:
        """Cat amplitude sqrt(P/K)."""
        return math.sqrt(self.drive / self.kerr)


def reference_params(delta: float = 0.0, kappa_phi: float = 0.0) -> SystemParams:
    """Reference working point: K/2pi = 6.7 MHz, P/2pi = 15.5 MHz, kappa/2pi = 10 kHz."""
    return SystemParams(
        delta=delta,
        kerr=TWO_PI * 6.7e6,
        drive=TWO_PI * 15.5e6,
        kappa=TWO_PI * 10e3,
        kappa_phi=kappa_phi,
    )


@dataclass(frozen=True)
class CatBasisParams:
    """Derived quantities of the cat-state pair |C+>, |C->.

    alpha       -- real cat amplitude sqrt(P/K)
    overlap_e   -- coherent-state overlap <alpha|-alpha> = exp(-2 alpha^2)
    norm_plus   -- N+ = 1/sqrt(2 (1 + overlap_e))
    norm_minus  -- N- = 1/sqrt(2 (1 - overlap_e))
    p           -- normalization ratio N+/N-, in (0, 1)
    p2_plus     -- p^-2 + p^2
    p2_minus    -- p^-2 - p^2  (equals 4 e / (1 - e^2))
    p4_plus     -- p^-4 + p^4
    l_phi       -- dephasing shift kappa_phi alpha^4 (1 - p4_plus/2), always <= 0
    """

    alpha: float
    overlap_e: float
    norm_plus: float
    norm_minus: float
    p: float
    p2_plus: float
    p2_minus: float
    p4_plus: float
    l_phi: float


def cat_basis_params(params: SystemParams) -> CatBasisParams:
    """Evaluate all cat-basis combinations for the given system parameters."""
    alpha = params.alpha
    e = math.exp(-2.0 * alpha * alpha)
    norm_plus = 1.0 / math.sqrt(2.0 * (1.0 + e))
    norm_minus = 1.0 / math.sqrt(2.0 * (1.0 - e))
    p = norm_plus / norm_minus
    p2 = p * p
    p2_plus = 1.0 / p2 + p2
    p2_minus = 1.0 / p2 - p2
    p4_plus = 1.0 / (p2 * p2) + p2 * p2
    alpha4 = (alpha * alpha) ** 2
    l_phi = params.kappa_phi * alpha4 * (1.0 - 0.5 * p4_plus)
    return CatBasisParams(
        alpha=alpha,
        overlap_e=e,
        norm_plus=norm_plus,
        norm_minus=norm_minus,
        p=p,
        p2_plus=p2_plus,
        p2_minus=p2_minus,
        p4_plus=p4_plus,
        l_phi=l_phi,
    )
