"""Fixed-gain amplify-and-forward relaying: outage, error rate, capacity and their asymptotes.

The end-to-end SINR is gamma_1 / (1 + W) with W = C / gamma_2.  Its CDF is a
single Mellin-Barnes integral

    F(x) = 1/(2 pi i) \\int E[gamma_1^{-w}] E[(1+W)^w] x^w / w dw,

and E[(1+W)^w] = E[(1+W)(1+W)^{w-1}] turns into two Mellin-Barnes integrals
in a second variable t with the coupling factor Gamma(1 - w + t).  With
s = -w each metric is therefore a sum of bivariate H-functions, two per
mixture component of the FSO law.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .channels import pdf_sir
from .errors import DegeneracyError, SpecError
from .params import FixedGain, ModulationScheme, RelaySystem, malaga_derive
from .specfun import (
    BivariateFoxHSpec,
    ContourSpec,
    FoxHSpec,
    MetricResult,
    _residue_term,
    combine,
    fox_h_bivariate,
)

__all__ = [
    "AsymptoticReport",
    "Branch",
    "ModulationScheme",
    "RelaySystem",
    "avg_ber",
    "avg_ber_asymptotic",
    "avg_ber_via_cdf",
    "capacity",
    "capacity_gamma_gamma_nakagami",
    "diversity_coding_gain",
    "e2e_pdf",
    "outage",
    "outage_asymptotic",
]

_TIE = 1e-9


class Branch(str, Enum):
    Nm = "Nm"
    kappa = "kappa"
    xi2_over_r = "xi2_over_r"
    alpha_over_r = "alpha_over_r"
    beta_over_r = "beta_over_r"
    k_over_r = "k_over_r"


@dataclass
class AsymptoticReport:
    diversityGain: float
    codingGain: float
    dominantBranch: Branch
    termBreakdown: dict = field(default_factory=dict)
    degenerate: bool = False
    leadingExponent: float = math.nan

    def to_dict(self):
        return {
            "diversity_gain": self.diversityGain,
            "leading_exponent": self.leadingExponent,
            "coding_gain": self.codingGain,
            "dominant_branch": self.dominantBranch.value,
            "degenerate": self.degenerate,
            **{f"term_{k}": v for k, v in self.termBreakdown.items()},
        }


# ----------------------------------------------------------------------------
# kernels
# ----------------------------------------------------------------------------


def _fso_kernel(xi2: float, a: float, k: int, r: float, kind: str, p: float = 0.5) -> FoxHSpec:
    """Kernel in s of E[Z^{rs}] times the metric-specific factor."""
    base = [(xi2, r), (a, r), (float(k), r)]
    if kind == "cdf":
        # Gamma(-s)/Gamma(1-s) = -1/s
        return FoxHSpec(3, 1, [(1.0, 1.0), (xi2 + 1, r), (1.0, 1.0)], base + [(0.0, 1.0)])
    if kind == "pdf":
        return FoxHSpec(3, 0, [(xi2 + 1, r), (1.0, 1.0)], base)
    if kind == "ber":
        return FoxHSpec(3, 2, [(1.0, 1.0), (1.0 - p, 1.0), (xi2 + 1, r), (1.0, 1.0)], base + [(0.0, 1.0)])
    if kind == "capacity":
        # pdf kernel times the Mellin transform pi/(s sin(pi s)) of ln(1+x)/x
        return FoxHSpec(5, 1, [(0.0, 1.0), (xi2 + 1, r), (1.0, 1.0), (1.0, 1.0)], base + [(0.0, 1.0), (0.0, 1.0)])
    raise SpecError(f"unknown kernel kind {kind!r}")


def _rf_kernels(sys: RelaySystem, shadowing: bool = True):
    """Kernels in t of E[W^t] and E[W^{t+1}] (argument 1/(C c)), with log normaliser."""
    rf, it = sys.rf, sys.interf
    Nm, LmI = rf.shape, it.shape
    if shadowing:
        t1 = FoxHSpec(2, 3, [(1.0, 1.0), (1.0 - Nm, 1.0), (1.0 - rf.kappa, 1.0)], [(LmI, 1.0), (it.kappa, 1.0)])
        t2 = FoxHSpec(
            2, 3, [(1.0, 1.0), (2.0 - Nm, 1.0), (2.0 - rf.kappa, 1.0)], [(LmI + 1, 1.0), (it.kappa + 1, 1.0)]
        )
        lognorm = gammaln(Nm) + gammaln(rf.kappa) + gammaln(LmI) + gammaln(it.kappa)
        scale = sys.sir_scale
    else:
        t1 = FoxHSpec(1, 2, [(1.0, 1.0), (1.0 - Nm, 1.0)], [(LmI, 1.0)])
        t2 = FoxHSpec(1, 2, [(1.0, 1.0), (2.0 - Nm, 1.0)], [(LmI + 1, 1.0)])
        lognorm = gammaln(Nm) + gammaln(LmI)
        scale = rf.m / (it.m * sys.sir_mean)
    return t1, t2, float(lognorm), sys.gain * scale


def _terms(sys: RelaySystem, kind: str, p: float = 0.5, shadowing: bool = True, gamma_gamma: bool = False):
    """(weight, bivariate spec, y, log scale) tuples; the x-argument is supplied by the caller."""
    fso = sys.fso
    d = malaga_derive(fso)
    xi2, a, r = fso.xi**2, fso.alpha, float(fso.r)
    t1, t2, lognorm, cc = _rf_kernels(sys, shadowing)
    y = 1.0 / cc
    joint = [(1.0, 1.0, 1.0)]
    out = []
    for k, w in enumerate(d.weights, start=1):
        if gamma_gamma and k != fso.beta:
            continue
        if w == 0.0:
            continue
        s_kernel = _fso_kernel(xi2, a, k, r, kind, p)
        pref = (1.0 if gamma_gamma else w) * xi2 * math.exp(-gammaln(a) - gammaln(k))
        out.append((pref, BivariateFoxHSpec(s_kernel, t1, joint), y, -lognorm))
        out.append((pref * cc, BivariateFoxHSpec(s_kernel, t2, joint), y, -lognorm))
    return out


def _require_fixed(sys: RelaySystem):
    if not isinstance(sys.scheme, FixedGain):
        raise SpecError("fixed-gain metric requested for a system without a fixed relay gain")


def _evaluate(terms, x_arg: float, contour: ContourSpec | None, **diag) -> MetricResult:
    parts = [fox_h_bivariate(spec, x_arg, y, contour, ls) for _, spec, y, ls in terms]
    return combine(parts, [t[0] for t in terms], **diag)


# ----------------------------------------------------------------------------
# exact metrics
# ----------------------------------------------------------------------------


def outage(sys: RelaySystem, gamma_th: float, contour: ContourSpec | None = None) -> MetricResult:
    """P(gamma < gamma_th) for fixed-gain relaying."""
    _require_fixed(sys)
    if not gamma_th > 0:
        raise SpecError("gamma_th must be positive")
    d = malaga_derive(sys.fso)
    X = d.B**sys.fso.r * gamma_th / d.mu_r
    res = _evaluate(_terms(sys, "cdf"), X, contour)
    res.value = min(max(res.value, 0.0), 1.0)
    return res


def e2e_pdf(sys: RelaySystem, x: float, contour: ContourSpec | None = None) -> MetricResult:
    _require_fixed(sys)
    if not x > 0:
        raise SpecError("x must be positive")
    d = malaga_derive(sys.fso)
    X = d.B**sys.fso.r * x / d.mu_r
    res = _evaluate(_terms(sys, "pdf"), X, contour)
    res.value = max(res.value, 0.0) / x
    res.error_estimate /= x
    return res


def avg_ber(sys: RelaySystem, mod: ModulationScheme, contour: ContourSpec | None = None) -> MetricResult:
    """Average error rate of the (phi, p, q) family under fixed-gain relaying."""
    _require_fixed(sys)
    d = malaga_derive(sys.fso)
    terms = _terms(sys, "ber", p=mod.p)
    scale = mod.phi / (2.0 * math.exp(gammaln(mod.p)))
    parts = []
    for qj in mod.q:
        X = d.B**sys.fso.r / (d.mu_r * qj)
        parts.append(_evaluate(terms, X, contour))
    res = combine(parts, [scale] * len(parts))
    res.value = max(res.value, 0.0)
    return res


def avg_ber_via_cdf(cdf, mod: ModulationScheme, rel_tol: float = 1e-6) -> float:
    """Error rate from a CDF: (phi/(2 Gamma(p))) sum_j q_j^p int x^{p-1} e^{-q_j x} F(x) dx."""
    total = 0.0
    for qj in mod.q:
        # x = v^(1/p) / q_j removes the x^{p-1} endpoint singularity
        def f(v):
            return math.exp(-(v ** (1.0 / mod.p))) * cdf(v ** (1.0 / mod.p) / qj) / mod.p

        vmax = 60.0**mod.p
        val, _ = integrate.quad(f, 0.0, vmax, epsrel=rel_tol, epsabs=1e-14, limit=200)
        total += val
    return mod.phi / (2.0 * math.exp(gammaln(mod.p))) * total


def _capacity_mu(sys: RelaySystem) -> float:
    mu = malaga_derive(sys.fso).mu_r
    return mu * math.e / (2.0 * math.pi) if sys.fso.r == 2 else mu


def capacity(sys: RelaySystem, contour: ContourSpec | None = None) -> MetricResult:
    """Ergodic capacity E[log2(1 + gamma)] / 2; for IM/DD the e/(2 pi) lower bound."""
    _require_fixed(sys)
    d = malaga_derive(sys.fso)
    X = d.B**sys.fso.r / _capacity_mu(sys)
    res = _evaluate(_terms(sys, "capacity"), X, contour)
    res.value = max(res.value, 0.0) / (2.0 * math.log(2.0))
    res.error_estimate /= 2.0 * math.log(2.0)
    res.diagnostics["lower_bound"] = sys.fso.r == 2
    return res


def capacity_gamma_gamma_nakagami(sys: RelaySystem, contour: ContourSpec | None = None) -> MetricResult:
    """Capacity with Gamma-Gamma turbulence and unshadowed Nakagami RF links.

    Only the beta-th mixture component is kept and the RF kernels carry no
    shadowing factors; this is the kappa, kappa_I -> infinity limit.
    """
    _require_fixed(sys)
    fso = sys.fso
    xi2 = fso.xi**2
    B = fso.alpha * fso.beta * xi2 / (xi2 + 1.0)
    X = B**fso.r / _capacity_mu(sys)
    res = _evaluate(_terms(sys, "capacity", shadowing=False, gamma_gamma=True), X, contour)
    res.value = max(res.value, 0.0) / (2.0 * math.log(2.0))
    res.error_estimate /= 2.0 * math.log(2.0)
    return res


# ----------------------------------------------------------------------------
# asymptotics
# ----------------------------------------------------------------------------


def _moment_q(sys: RelaySystem, e: float) -> float:
    """E[(1 + C/gamma_2)^e] by quadrature against the SIR density."""
    return _moment_q_cached(sys.rf, sys.interf, sys.gain, 1.0 / sys.sir_scale, e)


@functools.lru_cache(maxsize=256)
def _moment_q_cached(rf, interf, C: float, c: float, e: float) -> float:
    def f(u):
        y = math.exp(u)
        return (1.0 + C / y) ** e * pdf_sir(rf, interf, y) * y

    lo, hi = math.log(c) - 60.0, math.log(c) + 40.0
    pts = [math.log(c), math.log(C)]
    val, _ = integrate.quad(f, lo, hi, points=sorted(p for p in pts if lo < p < hi), epsrel=1e-9, limit=400)
    return val


def _asymptotic_terms(sys: RelaySystem):
    """Leading term of each pole family: list of dicts with exponent, coefficient and label.

    The outage behaves as sum_j coef_j * (B^r gamma_th / mu_r)^{e_j}.
    """
    fso, rf, it = sys.fso, sys.rf, sys.interf
    d = malaga_derive(fso)
    xi2, a, r = fso.xi**2, fso.alpha, float(fso.r)
    Nm, kap = rf.shape, rf.kappa
    lognorm = gammaln(Nm) + gammaln(kap) + gammaln(it.shape) + gammaln(it.kappa)
    cc = sys.gain * sys.sir_scale
    rf_cut = min(Nm, kap)
    q_cache: dict[float, float] = {}
    out = []
    for k, w in enumerate(d.weights, start=1):
        if w == 0.0:
            continue
        exps = {"xi2_over_r": xi2 / r, "alpha_over_r": a / r, "k_over_r": k / r, "Nm": Nm, "kappa": kap}
        vals = sorted(e for e in exps.values() if e < min((a + 1) / r, (k + 1) / r, Nm + 1, kap + 1))
        for u, v in zip(vals, vals[1:]):
            if abs(u - v) < _TIE * max(1.0, u):
                names = [n for n, e in exps.items() if abs(e - u) < _TIE * max(1.0, u)]
                raise DegeneracyError(f"exponents {names} coincide at {u:.6g} (double pole)")
        # a family's leading term is only meaningful below the second pole of every family
        cutoff = min((a + 1) / r, (k + 1) / r, Nm + 1, kap + 1)
        pref = w * xi2 * math.exp(-gammaln(a) - gammaln(k))
        # E[Z^{rs}] (Gamma-normalised) times -1/s, without the 1/Gamma(1+s) that belongs to E[(1+W)^{-s}]
        kernel = FoxHSpec(3, 1, [(1.0, 1.0), (xi2 + 1, r)], [(xi2, r), (a, r), (float(k), r), (0.0, 1.0)])
        # FSO families: residue of the s-kernel at its first pole times E[(1+W)^e]
        for j, label in enumerate(("xi2_over_r", "alpha_over_r", "k_over_r")):
            e = exps[label]
            if e >= rf_cut or e >= cutoff:
                continue
            if e not in q_cache:
                q_cache[e] = _moment_q(sys, e)
            res = _residue_term(kernel, j, 0, -e, 0.0)
            out.append({"k": k, "branch": label, "exponent": e, "coef": pref * res * q_cache[e]})
        # RF families: pole of E[W^w] at w = Nm or kappa
        for label, e, other in (("Nm", Nm, kap), ("kappa", kap, Nm)):
            if e >= cutoff:
                continue
            log_m1 = gammaln(a - r * e) + gammaln(k - r * e) - gammaln(a) - gammaln(k)
            sign_m1 = _gamma_sign(a - r * e) * _gamma_sign(k - r * e)
            m1 = sign_m1 * math.exp(log_m1) * xi2 / (xi2 - r * e) * math.exp(gammaln(a) + gammaln(k))
            rest = gammaln(other - e) + gammaln(it.shape + e) + gammaln(it.kappa + e) - lognorm
            coef = w * m1 * math.exp(-gammaln(a) - gammaln(k)) * _gamma_sign(other - e) * math.exp(rest) * cc**e / e
            out.append({"k": k, "branch": label, "exponent": e, "coef": coef})
    return out


def _gamma_sign(z: float) -> float:
    if z > 0:
        return 1.0
    if float(z).is_integer():
        raise DegeneracyError(f"Gamma pole at {z}")
    return -1.0 if math.floor(z) % 2 else 1.0


def outage_asymptotic(sys: RelaySystem, gamma_th: float) -> MetricResult:
    """High-SNR outage: leading residue of every pole family, summed."""
    _require_fixed(sys)
    if not gamma_th > 0:
        raise SpecError("gamma_th must be positive")
    d = malaga_derive(sys.fso)
    X = d.B**sys.fso.r * gamma_th / d.mu_r
    terms = _asymptotic_terms(sys)
    contrib = {}
    total = 0.0
    for t in terms:
        v = t["coef"] * X ** t["exponent"]
        total += v
        contrib[t["branch"]] = contrib.get(t["branch"], 0.0) + v
    emin = min(t["exponent"] for t in terms)
    return MetricResult(
        float(total),
        0.0,
        True,
        {"min_exponent": emin, "argument": X, "valid": X < 1e-2, **{f"branch_{k}": v for k, v in contrib.items()}},
    )


def avg_ber_asymptotic(sys: RelaySystem, mod: ModulationScheme) -> MetricResult:
    """High-SNR error rate: each outage term c X^e integrates to c Gamma(p+e) (B^r/(mu_r q_j))^e."""
    _require_fixed(sys)
    d = malaga_derive(sys.fso)
    terms = _asymptotic_terms(sys)
    total = 0.0
    for qj in mod.q:
        X = d.B**sys.fso.r / (d.mu_r * qj)
        for t in terms:
            e = t["exponent"]
            total += t["coef"] * math.exp(gammaln(mod.p + e)) * X**e
    total *= mod.phi / (2.0 * math.exp(gammaln(mod.p)))
    return MetricResult(float(total), 0.0, True, {"min_exponent": min(t["exponent"] for t in terms)})


def diversity_coding_gain(sys: RelaySystem, gamma_th: float) -> AsymptoticReport:
    """Diversity order min(Nm, kappa, xi^2/r, alpha/r, beta/r) and the coding gain.

    The closed-form order uses the beta-th mixture component.  For Malaga
    turbulence with g > 0 the k < beta components decay more slowly, so the
    outage slope is ``leadingExponent`` (the smallest exponent over all
    terms), which can sit below the closed-form order.  The coding gain is
    defined through P_out ~ (G_c mu_r)^{-e} at that leading exponent e.
    """
    _require_fixed(sys)
    fso, rf = sys.fso, sys.rf
    r = float(fso.r)
    branches = {
        Branch.Nm: rf.shape,
        Branch.kappa: rf.kappa,
        Branch.xi2_over_r: fso.xi**2 / r,
        Branch.alpha_over_r: fso.alpha / r,
        Branch.beta_over_r: fso.beta / r,
    }
    gd = min(branches.values())
    tied = [b for b, e in branches.items() if abs(e - gd) < _TIE * max(1.0, gd)]
    dominant = tied[0]
    d = malaga_derive(fso)
    breakdown = {}
    try:
        terms = _asymptotic_terms(sys)
    except DegeneracyError:
        terms = []
    for t in terms:
        breakdown[f"{t['branch']}_k{t['k']}"] = t["coef"]
    lead = min((t["exponent"] for t in terms), default=gd)
    coef = sum(t["coef"] for t in terms if abs(t["exponent"] - lead) < _TIE * max(1.0, lead))
    # P_out ~ coef (B^r gamma_th / mu_r)^e = (G_c mu_r)^{-e}
    scale = d.B**fso.r * gamma_th
    gc = (coef * scale**lead) ** (-1.0 / lead) if coef > 0 else math.nan
    return AsymptoticReport(float(gd), float(gc), dominant, breakdown, len(tied) > 1 or not terms, float(lead))
