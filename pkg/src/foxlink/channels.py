"""Single-hop statistics: Malaga FSO with pointing errors, generalized-K RF with interference."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, SpecError
from .params import (
    GenKParams,
    MalagaDerived,
    MalagaParams,
    PathLossParams,
    malaga_derive,
    mixture_weights,
)
from .specfun import ContourSpec, FoxHSpec, MeijerGSpec, MetricResult, combine, fox_h

__all__ = [
    "GenKParams",
    "MalagaDerived",
    "MalagaParams",
    "PathLossParams",
    "avg_power",
    "cdf_fso",
    "cdf_genk",
    "cdf_sir",
    "fso_terms",
    "kappa_from_sigma_db",
    "malaga_derive",
    "mean_fso_snr",
    "path_loss_db",
    "pdf_fso",
    "pdf_genk",
    "pdf_sir",
    "sir_ccdf_spec",
]

_CLAMP = 1e-9


def _require(res: MetricResult, what: str) -> MetricResult:
    if not res.converged:
        raise ConvergenceError(f"{what} did not converge (error estimate {res.error_estimate:.2e})")
    return res


def _clamp_probability(res: MetricResult, what: str) -> MetricResult:
    _require(res, what)
    v = res.value
    if v < -_CLAMP or v > 1 + _CLAMP:
        raise ConvergenceError(f"{what} evaluated to {v:.3e}, outside [0, 1]")
    res.value = min(max(v, 0.0), 1.0)
    return res


# ----------------------------------------------------------------------------
# FSO hop
# ----------------------------------------------------------------------------


def fso_terms(p: MalagaParams, kind: str = "cdf"):
    """Mixture components of the FSO SNR law as (weight, spec) pairs.

    Every spec is evaluated at B**r * x / mu_r.  ``kind`` is ``cdf``,
    ``ccdf`` or ``pdf`` (the pdf spec still needs a 1/x factor).
    """
    d = malaga_derive(p)
    r, xi2, a = float(p.r), p.xi**2, p.alpha
    out = []
    for k, w in enumerate(d.weights, start=1):
        if w == 0.0:
            continue
        pref = w * xi2 / math.exp(gammaln(a) + gammaln(k))
        if kind == "cdf":
            spec = FoxHSpec(3, 1, [(1.0, r), (xi2 + 1, r)], [(xi2, r), (a, r), (k, r), (0.0, r)])
            out.append((pref * r, spec))
        elif kind == "ccdf":
            spec = FoxHSpec(4, 0, [(1.0, r), (xi2 + 1, r)], [(0.0, r), (xi2, r), (a, r), (k, r)])
            out.append((pref * r, spec))
        elif kind == "pdf":
            spec = FoxHSpec(3, 0, [(xi2 + 1, r)], [(xi2, r), (a, r), (k, r)])
            out.append((pref, spec))
        else:
            raise SpecError(f"unknown kind {kind!r}")
    return out


def _fso_argument(p: MalagaParams, x: float) -> float:
    d = malaga_derive(p)
    return d.B**p.r * x / d.mu_r


def cdf_fso(p: MalagaParams, x: float, contour: ContourSpec | None = None, detail: bool = False):
    """P(gamma_1 <= x)."""
    if x < 0:
        raise SpecError("x must be non-negative")
    if x == 0:
        res = MetricResult(0.0, 0.0, True, {"terms": 0})
        return res if detail else 0.0
    arg = _fso_argument(p, x)
    terms = fso_terms(p, "cdf")
    res = combine([fox_h(s, arg, contour) for _, s in terms], [w for w, _ in terms])
    res = _clamp_probability(res, "FSO CDF")
    return res if detail else res.value


def pdf_fso(p: MalagaParams, x: float, contour: ContourSpec | None = None) -> float:
    if not x > 0:
        raise SpecError("x must be positive")
    arg = _fso_argument(p, x)
    terms = fso_terms(p, "pdf")
    res = _require(combine([fox_h(s, arg, contour) for _, s in terms], [w for w, _ in terms]), "FSO density")
    return max(res.value, 0.0) / x


# ----------------------------------------------------------------------------
# RF hop
# ----------------------------------------------------------------------------


def _log_gamma4(desired: GenKParams, interf: GenKParams) -> float:
    return float(gammaln(desired.shape) + gammaln(desired.kappa) + gammaln(interf.shape) + gammaln(interf.kappa))


def _sir_scale(desired: GenKParams, interf: GenKParams) -> float:
    gbar = desired.meanPower / interf.meanPower
    return desired.kappa * desired.m / (interf.kappa * interf.m * gbar)


def sir_ccdf_spec(desired: GenKParams, interf: GenKParams) -> MeijerGSpec:
    """G^{3,2}_{3,3} whose value over Gamma(Nm)Gamma(kappa)Gamma(Lm_I)Gamma(kappa_I) is P(SIR > x)."""
    return MeijerGSpec.from_lists(
        3, 2, [1.0 - interf.kappa, 1.0 - interf.shape, 1.0], [0.0, desired.kappa, desired.shape]
    )


def cdf_sir(desired: GenKParams, interf: GenKParams, x: float, contour: ContourSpec | None = None, detail: bool = False):
    """P(gamma_RD / gamma_ID <= x) with the SIR mean set by the two mean powers."""
    if x < 0:
        raise SpecError("x must be non-negative")
    if x == 0:
        res = MetricResult(0.0, 0.0, True, {})
        return res if detail else 0.0
    c = _sir_scale(desired, interf)
    g = fox_h(sir_ccdf_spec(desired, interf), c * x, contour, -_log_gamma4(desired, interf))
    res = MetricResult(1.0 - g.value, g.error_estimate, g.converged, g.diagnostics)
    res = _clamp_probability(res, "SIR CDF")
    return res if detail else res.value


def pdf_sir(desired: GenKParams, interf: GenKParams, x: float, contour: ContourSpec | None = None) -> float:
    if not x > 0:
        raise SpecError("x must be positive")
    c = _sir_scale(desired, interf)
    spec = MeijerGSpec.from_lists(
        2, 2, [-interf.shape, -interf.kappa], [desired.shape - 1.0, desired.kappa - 1.0]
    )
    g = _require(fox_h(spec, c * x, contour, -_log_gamma4(desired, interf)), "SIR density")
    return max(c * g.value, 0.0)


def pdf_genk(p: GenKParams, x: float, contour: ContourSpec | None = None) -> float:
    if x < 0:
        raise SpecError("x must be non-negative")
    if x == 0:
        return 0.0
    c = p.m * p.kappa / p.meanPower
    spec = MeijerGSpec.from_lists(2, 0, [], [p.shape - 1.0, p.kappa - 1.0])
    g = _require(fox_h(spec, c * x, contour, -gammaln(p.shape) - gammaln(p.kappa)), "generalized-K density")
    return max(c * g.value, 0.0)


def cdf_genk(p: GenKParams, x: float, contour: ContourSpec | None = None) -> float:
    if x < 0:
        raise SpecError("x must be non-negative")
    if x == 0:
        return 0.0
    c = p.m * p.kappa / p.meanPower
    spec = MeijerGSpec.from_lists(2, 1, [1.0], [p.shape, p.kappa, 0.0])
    g = fox_h(spec, c * x, contour, -gammaln(p.shape) - gammaln(p.kappa))
    res = MetricResult(g.value, g.error_estimate, g.converged)
    return _clamp_probability(res, "generalized-K CDF").value


# ----------------------------------------------------------------------------
# link budget
# ----------------------------------------------------------------------------


def path_loss_db(p: PathLossParams) -> float:
    return 20.0 * math.log10(4.0 * math.pi * p.d0 / p.wavelength) + 10.0 * p.eta * math.log10(p.distance / p.d0)


def avg_power(p: PathLossParams, tx_power: float) -> float:
    if not tx_power > 0:
        raise SpecError("transmit power must be positive")
    return tx_power * (p.wavelength / (4.0 * math.pi * p.d0)) ** 2 * (p.d0 / p.distance) ** p.eta


def kappa_from_sigma_db(sigma_db: float) -> float:
    """Shadowing shape matched to a lognormal spread given in dB."""
    if not sigma_db > 0:
        raise SpecError("sigma_db must be positive")
    sigma = sigma_db * math.log(10.0) / 10.0
    return 1.0 / math.expm1(sigma**2)


def mean_fso_snr(p: MalagaParams) -> float:
    """E[gamma_1] from the mixture moments; equals mu1 for heterodyne detection."""
    d = malaga_derive(p)
    w = np.asarray(d.weights)
    k = np.arange(1, p.beta + 1)
    r, xi2 = p.r, p.xi**2
    # E[(G_a G_k U^{1/xi2})^r] / B^r
    mom = np.exp(gammaln(p.alpha + r) - gammaln(p.alpha) + gammaln(k + r) - gammaln(k)) * xi2 / (xi2 + r)
    return float(d.mu_r * np.sum(w * mom) / d.B**r)
