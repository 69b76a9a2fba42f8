"""Split of a total power budget between the optical source and the relay.

The high-SNR outage of CSI-assisted relaying is approximated by

    P_out ~ G (A_F P_F^{-a} + A_R P_R^{-a}),

with mu_r = P_F exp(-delta d_F) on the optical hop and
gamma_bar = P_R * path_gain / gamma_I on the RF hop.  Minimising it under
P_F + P_R = P_tot gives P_X proportional to A_X^{1/(a+1)}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize
from scipy.special import expit, gammaln

from .csi_assisted import _asymptotic_terms, outage_bound
from .errors import SpecError
from .params import CsiAssisted, PathLossParams, RelaySystem, malaga_derive

__all__ = [
    "PowerAllocProblem",
    "build_problem",
    "configure",
    "equal_split",
    "grid_search",
    "objective",
    "optimal_split",
    "path_gain",
    "required_total_power",
    "split_outage",
]

_RF = ("Nm", "kappa")


@dataclass(frozen=True)
class PowerAllocProblem:
    G: float
    A_F: float
    A_R: float
    a: float
    P_tot: float
    S_cap: float = math.inf
    delta: float = 0.0
    fsoDistance: float = 1.0

    def __post_init__(self):
        for name in ("G", "A_F", "A_R", "a", "P_tot", "S_cap", "fsoDistance"):
            v = getattr(self, name)
            if not v > 0:
                raise SpecError(f"{name} must be positive (got {v})")
        if self.delta < 0:
            raise SpecError("attenuation delta must be non-negative")

    def with_total(self, P_tot: float) -> "PowerAllocProblem":
        return replace(self, P_tot=P_tot)


def path_gain(pl: PathLossParams) -> float:
    """(lambda / (4 pi d0))^2 (d0 / d)^eta."""
    return (pl.wavelength / (4.0 * math.pi * pl.d0)) ** 2 * (pl.d0 / pl.distance) ** pl.eta


def configure(sys: RelaySystem, pathLoss: PathLossParams, P_F: float, P_R: float, delta: float = 0.0, fso_distance: float = 1.0) -> RelaySystem:
    """System whose hop SNRs follow from the two transmit powers."""
    if not (P_F > 0 and P_R > 0):
        raise SpecError("powers must be positive")
    out = sys.with_mu_r(P_F * math.exp(-delta * fso_distance))
    return replace(out, rf=replace(out.rf, meanPower=P_R * path_gain(pathLoss)))


def build_problem(
    sys: RelaySystem,
    gammaTh: float,
    pathLoss: PathLossParams,
    P_tot: float,
    S_cap: float = math.inf,
    delta: float = 0.0,
    fso_distance: float = 1.0,
) -> PowerAllocProblem:
    """Coefficients of the two-term surrogate from the CSI-assisted asymptote.

    a is the smallest exponent over both hops.  Each hop contributes its
    terms at its own smallest exponent, re-expressed with exponent a; when
    the two hops share that exponent the surrogate is the exact asymptote.
    The interference power is ``sys.interf.meanPower``.
    """
    if not isinstance(sys.scheme, CsiAssisted):
        raise SpecError("the power-allocation surrogate is defined for CSI-assisted relaying")
    if not gammaTh > 0:
        raise SpecError("gammaTh must be positive")
    fso, rf, it = sys.fso, sys.rf, sys.interf
    at = _asymptotic_terms(sys)
    a = at.diversity_order

    def dominant(rf_hop: bool) -> float:
        hop = [t for t in at.terms if (t["branch"] in _RF) == rf_hop]
        emin = min(t["exponent"] for t in hop)
        return sum(t["coef"] for t in hop if abs(t["exponent"] - emin) <= 1e-9 * max(1.0, emin))

    xi2 = fso.xi**2
    logG = (
        math.log(xi2)
        + a * math.log(gammaTh)
        - gammaln(fso.alpha)
        - gammaln(rf.shape)
        - gammaln(rf.kappa)
        - gammaln(it.shape)
        - gammaln(it.kappa)
        - gammaln(fso.beta)
    )
    G = math.exp(logG)
    d = malaga_derive(fso)
    # per unit G: G * A_F * P_F^-a = c_F (B^r gamma_th e^{delta d_F} / P_F)^a
    fso_scale = d.B**fso.r * gammaTh * math.exp(delta * fso_distance)
    rf_scale = rf.kappa * rf.m * it.meanPower * gammaTh / (it.kappa * it.m * path_gain(pathLoss))
    A_F = dominant(False) * fso_scale**a / G
    A_R = dominant(True) * rf_scale**a / G
    return PowerAllocProblem(G, A_F, A_R, a, P_tot, S_cap, delta, fso_distance)


def objective(prob: PowerAllocProblem, P_F: float, P_R: float) -> float:
    if not (P_F > 0 and P_R > 0):
        raise SpecError("powers must be positive")
    return prob.G * (prob.A_F * P_F ** -prob.a + prob.A_R * P_R ** -prob.a)


def optimal_split(prob: PowerAllocProblem) -> tuple[float, float]:
    """Closed-form minimiser; an optical share above S_cap is clamped and the rest goes to the relay."""
    b = 1.0 / (prob.a + 1.0)
    # logistic form avoids overflow of A^b; the smaller share is computed
    # directly so it never rounds to zero
    t = b * (math.log(prob.A_F) - math.log(prob.A_R))
    if t <= 0:
        P_F = float(expit(t)) * prob.P_tot
        P_R = prob.P_tot - P_F
    else:
        P_R = float(expit(-t)) * prob.P_tot
        P_F = prob.P_tot - P_R
    if P_F > prob.S_cap:
        P_F, P_R = prob.S_cap, prob.P_tot - prob.S_cap
    return P_F, P_R


def equal_split(prob: PowerAllocProblem) -> tuple[float, float]:
    P_F = min(prob.P_tot / 2.0, prob.S_cap)
    return P_F, prob.P_tot - P_F


def grid_search(prob: PowerAllocProblem, points: int = 2000) -> tuple[float, float, float]:
    """Best (P_F, P_R, objective) over an evenly spaced grid of feasible optical powers."""
    hi = min(prob.S_cap, prob.P_tot)
    P_F = np.linspace(0.0, hi, points + 2)[1:-1] if hi == prob.P_tot else np.linspace(0.0, hi, points + 1)[1:]
    P_R = prob.P_tot - P_F
    vals = prob.G * (prob.A_F * P_F ** -prob.a + prob.A_R * P_R ** -prob.a)
    i = int(np.argmin(vals))
    return float(P_F[i]), float(P_R[i]), float(vals[i])


def split_outage(
    sys: RelaySystem,
    gammaTh: float,
    pathLoss: PathLossParams,
    P_F: float,
    P_R: float,
    delta: float = 0.0,
    fso_distance: float = 1.0,
) -> float:
    """Outage bound of the system run at the given powers."""
    return outage_bound(configure(sys, pathLoss, P_F, P_R, delta, fso_distance), gammaTh, cross_check=False).value


def required_total_power(
    sys: RelaySystem,
    gammaTh: float,
    pathLoss: PathLossParams,
    target: float,
    strategy: str = "optimal",
    delta: float = 0.0,
    fso_distance: float = 1.0,
    bracket_db: tuple[float, float] = (-20.0, 200.0),
) -> float:
    """Total power in dB at which the outage bound of a strategy reaches ``target``."""
    if strategy not in ("optimal", "equal"):
        raise SpecError("strategy must be 'optimal' or 'equal'")
    base = build_problem(sys, gammaTh, pathLoss, 1.0, delta=delta, fso_distance=fso_distance)

    def gap(p_db):
        prob = base.with_total(10.0 ** (p_db / 10.0))
        P_F, P_R = optimal_split(prob) if strategy == "optimal" else equal_split(prob)
        return math.log(split_outage(sys, gammaTh, pathLoss, P_F, P_R, delta, fso_distance)) - math.log(target)

    return float(optimize.brentq(gap, *bracket_db, xtol=1e-6))
