"""Parameter blocks shared by the analytic modules and the Monte-Carlo oracle.

Nothing here touches the special-function machinery, so the simulator can
depend on this module without depending on any analytic code path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import comb

from .errors import SpecError


# ----------------------------------------------------------------------------
# FSO hop
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MalagaParams:
    """Malaga turbulence with pointing errors.

    ``mu1`` is the heterodyne electrical SNR E[gamma_1]; for IM/DD the
    electrical SNR is derived from it (see :func:`malaga_derive`).
    ``phase_a``/``phase_b`` are the deterministic phases of the LOS and
    coupled-scatter components; they only enter through the coherent power.
    """

    alpha: float
    beta: int
    b0: float = 0.25
    rho: float = 0.75
    Omega: float = 0.5
    xi: float = 1.1
    r: int = 1
    mu1: float = 1.0
    phase_a: float = 0.0
    phase_b: float = 0.0
    beta_source: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise SpecError("alpha must be positive")
        if isinstance(self.beta, float):
            if not self.beta.is_integer():
                raise SpecError(f"beta must be an integer (got {self.beta}); use MalagaParams.rounded")
            object.__setattr__(self, "beta", int(self.beta))
        if self.beta < 1:
            raise SpecError("beta must be >= 1")
        if self.b0 < 0 or self.Omega < 0:
            raise SpecError("b0 and Omega must be non-negative")
        if not 0.0 <= self.rho <= 1.0:
            raise SpecError("rho must lie in [0, 1]")
        if not self.xi > 0:
            raise SpecError("xi must be positive")
        if self.r not in (1, 2):
            raise SpecError("detection r must be 1 (heterodyne) or 2 (IM/DD)")
        if not self.mu1 > 0:
            raise SpecError("mu1 must be positive")
        if self.g + self.coherent_power <= 0:
            raise SpecError("total small-scale power g + Omega must be positive")

    @classmethod
    def rounded(cls, alpha, beta, **kw) -> "MalagaParams":
        """Construct with a non-integer beta rounded to the nearest integer."""
        b = int(round(beta))
        if b != beta:
            warnings.warn(f"beta={beta} rounded to {b} for the finite-sum Malaga model", stacklevel=2)
        return cls(alpha, max(b, 1), beta_source=float(beta) if b != beta else None, **kw)

    @classmethod
    def from_g_omega(cls, alpha, beta, g, Omega, **kw) -> "MalagaParams":
        """Parameterise directly by the scatter power g and LOS power Omega."""
        return cls(alpha, beta, b0=g / 2.0, rho=0.0, Omega=Omega, **kw)

    @classmethod
    def gamma_gamma(cls, alpha, beta, **kw) -> "MalagaParams":
        """Gamma-Gamma turbulence: g = 0, Omega = 1."""
        return cls(alpha, beta, b0=0.0, rho=1.0, Omega=1.0, **kw)

    @property
    def g(self) -> float:
        return 2.0 * self.b0 * (1.0 - self.rho)

    @property
    def coherent_power(self) -> float:
        """Power of the LOS plus coupled-scatter component."""
        z = math.sqrt(self.Omega) * complex(math.cos(self.phase_a), math.sin(self.phase_a))
        z += math.sqrt(2.0 * self.b0 * self.rho) * complex(math.cos(self.phase_b), math.sin(self.phase_b))
        return abs(z) ** 2

    @property
    def mu_r(self) -> float:
        return malaga_derive(self).mu_r

    def with_mu_r(self, mu_r: float) -> "MalagaParams":
        """Copy whose electrical SNR at the configured detection equals ``mu_r``."""
        return replace(self, mu1=mu_r / _mu_ratio(self))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MalagaDerived:
    A: float
    bk: tuple
    weights: tuple
    B: float
    h: float
    mu_r: float
    g: float
    Omega_eff: float


def _mu_ratio(p: MalagaParams) -> float:
    if p.r == 1:
        return 1.0
    a, b, xi2, g, om = p.alpha, p.beta, p.xi**2, p.g, p.coherent_power
    num = a * xi2 * (xi2 + 1.0) ** -2 * (xi2 + 2.0) * (g + om)
    den = (a + 1.0) * (2.0 * g * (g + 2.0 * om) + om**2 * (1.0 + 1.0 / b))
    return num / den


def mixture_weights(p: MalagaParams) -> np.ndarray:
    """Probabilities of the Gamma(k) components, k = 1..beta, of the small-scale term.

    They equal A*b_k of the closed form but stay finite when g = 0.
    """
    b, g, om = p.beta, p.g, p.coherent_power
    tot = g * b + om
    k = np.arange(1, b + 1)
    return comb(b - 1, k - 1) * (om / tot) ** (k - 1) * (g * b / tot) ** (b - k)


def malaga_derive(p: MalagaParams) -> MalagaDerived:
    a, b, g, om = p.alpha, p.beta, p.g, p.coherent_power
    h = p.xi**2 / (p.xi**2 + 1.0)
    B = a * b * h * (g + om) / (g * b + om)
    k = np.arange(1, b + 1)
    if g > 0:
        A = a ** (a / 2) * (g * b / (g * b + om)) ** (b + a / 2) * g ** (-1 - a / 2)
        bk = (
            comb(b - 1, k - 1)
            * (g * b + om) ** (1 - k / 2)
            * ((g * b + om) / (a * b)) ** ((a + k) / 2)
            * (om / g) ** (k - 1)
            * (a / b) ** (k / 2)
        )
    else:
        A, bk = math.inf, np.full(b, math.nan)
    w = mixture_weights(p)
    return MalagaDerived(float(A), tuple(map(float, bk)), tuple(map(float, w)), float(B), float(h), float(p.mu1 * _mu_ratio(p)), g, om)


# ----------------------------------------------------------------------------
# RF hop
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GenKParams:
    """Generalized-K branch: ``multiplicity`` Nakagami-m terms under Gamma(kappa) shadowing."""

    m: float
    kappa: float
    multiplicity: int = 1
    meanPower: float = 1.0

    def __post_init__(self):
        if not (self.m > 0 and self.kappa > 0 and self.meanPower > 0):
            raise SpecError("m, kappa and meanPower must be positive")
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise SpecError("multiplicity must be a positive integer")
        object.__setattr__(self, "multiplicity", int(self.multiplicity))

    @property
    def shape(self) -> float:
        """Nakagami shape of the aggregate, multiplicity * m."""
        return self.multiplicity * self.m


@dataclass(frozen=True)
class PathLossParams:
    d0: float = 5.0
    wavelength: float = 10.71e-3
    eta: float = 2.5
    distance: float = 50.0

    def __post_init__(self):
        if not (self.d0 > 0 and self.wavelength > 0 and self.eta > 0):
            raise SpecError("d0, wavelength and eta must be positive")
        if self.distance < self.d0:
            raise SpecError("distance must be at least d0")


# ----------------------------------------------------------------------------
# relay system and modulation
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedGain:
    C: float

    def __post_init__(self):
        if not self.C > 0:
            raise SpecError("fixed relay gain C must be positive")


@dataclass(frozen=True)
class CsiAssisted:
    pass


@dataclass(frozen=True)
class RelaySystem:
    fso: MalagaParams
    rf: GenKParams
    interf: GenKParams
    scheme: FixedGain | CsiAssisted = field(default_factory=CsiAssisted)

    @property
    def sir_mean(self) -> float:
        return self.rf.meanPower / self.interf.meanPower

    @property
    def sir_scale(self) -> float:
        """c with c * gamma_2 = ratio of unit-mean-normalised Gamma products."""
        return self.rf.kappa * self.rf.m / (self.interf.kappa * self.interf.m * self.sir_mean)

    @property
    def gain(self) -> float:
        if not isinstance(self.scheme, FixedGain):
            raise SpecError("system is not configured for fixed-gain relaying")
        return self.scheme.C

    def with_fso(self, **kw) -> "RelaySystem":
        return replace(self, fso=replace(self.fso, **kw))

    def with_mu_r(self, mu_r: float) -> "RelaySystem":
        return replace(self, fso=self.fso.with_mu_r(mu_r))

    def with_sir_mean(self, gbar: float) -> "RelaySystem":
        return replace(self, rf=replace(self.rf, meanPower=gbar * self.interf.meanPower))


@dataclass(frozen=True)
class ModulationScheme:
    """Error-rate family (phi/2) * sum_j Gamma(p, q_j x) / Gamma(p)."""

    phi: float
    p: float
    q: tuple
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in np.atleast_1d(self.q)))
        if not (self.phi > 0 and self.p > 0 and self.q and all(v > 0 for v in self.q)):
            raise SpecError("modulation parameters must be positive")

    @property
    def n(self) -> int:
        return len(self.q)

    @classmethod
    def builtin(cls, name: str) -> "ModulationScheme":
        key = name.lower().replace("-", "").replace("_", "")
        if key == "bpsk":
            return cls(1.0, 0.5, (1.0,), "bpsk")
        if key in ("qpsk", "4psk"):
            return cls(1.0, 0.5, (0.5,), "qpsk")
        if key.endswith("psk") and key[:-3].isdigit():
            M = int(key[:-3])
            return cls(2.0 / math.log2(M), 0.5, (math.sin(math.pi / M) ** 2,), f"{M}psk")
        raise SpecError(f"unknown modulation {name!r}")
