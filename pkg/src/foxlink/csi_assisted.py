"""CSI-assisted (variable-gain) relaying.

Outage and error rate use the bound gamma <= min(gamma_1, gamma_2), whose CDF
is 1 - F1c F2c.  The ergodic capacity is exact: for
gamma = gamma_1 gamma_2 / (gamma_1 + gamma_2 + 1),

    E[ln(1 + gamma)] = int_0^inf s e^{-s} M1c(s) M2c(s) ds,

with Mc the Laplace transform of the complementary CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import integrate
from scipy.special import gammaln

from .channels import cdf_fso, cdf_sir, fso_terms, sir_ccdf_spec
from .errors import ConsistencyError, ConvergenceError, DegeneracyError, SpecError
from .fixed_gain import avg_ber_via_cdf
from .params import CsiAssisted, ModulationScheme, RelaySystem, malaga_derive
from .specfun import (
    BivariateFoxHSpec,
    ContourSpec,
    FoxHSpec,
    MeijerGSpec,
    MetricResult,
    _residue_term,
    bivariate_contour,
    combine,
    flip,
    fox_h,
    fox_h_bivariate,
)

__all__ = [
    "CsiAsymptoticTerms",
    "avg_ber_csi",
    "avg_ber_csi_via_cdf",
    "capacity_csi",
    "capacity_csi_nakagami",
    "capacity_via_cmgf",
    "cmgf_fso",
    "cmgf_sir",
    "outage_asymptotic_csi",
    "outage_bound",
]

_TIE = 1e-9
_ROUTE_RTOL = 1e-5
_LABELS = ("Nm", "kappa", "xi2_over_r", "alpha_over_r", "k_over_r")


@dataclass
class CsiAsymptoticTerms:
    """Leading exponent psi_j and coefficient zeta_j of each pole family.

    The bound behaves as sum_j (zeta_j / psi_j) u_j^{psi_j}, where u_j is
    c * gamma_th for the two RF families and B^r gamma_th / mu_r for the
    three FSO families.  ``terms`` keeps every retained (k, family) term.
    """

    psi: list
    zeta: list
    labels: tuple = _LABELS
    terms: list = field(default_factory=list)

    @property
    def diversity_order(self) -> float:
        return min(p for p, z in zip(self.psi, self.zeta) if z != 0.0)


def _require_csi(sys: RelaySystem):
    if not isinstance(sys.scheme, CsiAssisted):
        raise SpecError("CSI-assisted metric requested for a fixed-gain system")


def _log_gamma4(sys: RelaySystem) -> float:
    rf, it = sys.rf, sys.interf
    return float(gammaln(rf.shape) + gammaln(rf.kappa) + gammaln(it.shape) + gammaln(it.kappa))


def _sir_kernel(sys: RelaySystem, shadowing: bool = True):
    """(spec, log normaliser, scale) with P(gamma_2 > x) = spec[scale x] / exp(lognorm)."""
    rf, it = sys.rf, sys.interf
    if shadowing:
        return sir_ccdf_spec(rf, it), _log_gamma4(sys), sys.sir_scale
    spec = MeijerGSpec.from_lists(2, 1, [1.0 - it.shape, 1.0], [0.0, rf.shape])
    return spec, float(gammaln(rf.shape) + gammaln(it.shape)), rf.m / (it.m * sys.sir_mean)


# ----------------------------------------------------------------------------
# outage
# ----------------------------------------------------------------------------


def _bivariate_outage(sys: RelaySystem, gamma_th: float, contour: ContourSpec) -> MetricResult:
    d = malaga_derive(sys.fso)
    X = d.B**sys.fso.r * gamma_th / d.mu_r
    t_spec, lognorm, c = _sir_kernel(sys)
    terms = fso_terms(sys.fso, "ccdf")
    parts = [fox_h_bivariate(BivariateFoxHSpec(s, t_spec), X, c * gamma_th, contour, -lognorm) for _, s in terms]
    prod = combine(parts, [w for w, _ in terms])
    return MetricResult(1.0 - prod.value, prod.error_estimate, prod.converged, prod.diagnostics)


def outage_bound(
    sys: RelaySystem,
    gamma_th: float,
    contour: ContourSpec | None = None,
    cross_check: bool = True,
) -> MetricResult:
    """P(min(gamma_1, gamma_2) < gamma_th), a lower bound on the exact outage.

    The value comes from the two hop CDFs.  With ``cross_check`` the same
    quantity is also evaluated as one separable double Mellin-Barnes integral
    and a ConsistencyError is raised if the two disagree.
    """
    _require_csi(sys)
    if not gamma_th > 0:
        raise SpecError("gamma_th must be positive")
    f1 = cdf_fso(sys.fso, gamma_th, contour, detail=True)
    f2 = cdf_sir(sys.rf, sys.interf, gamma_th, contour, detail=True)
    # written without 1 - (1 - F1)(1 - F2) so tiny outages keep their digits
    value = f1.value + f2.value - f1.value * f2.value
    err = f1.error_estimate + f2.error_estimate
    diag = {"fso_cdf": f1.value, "sir_cdf": f2.value}
    if cross_check:
        biv = _bivariate_outage(sys, gamma_th, bivariate_contour(rel_tol=1e-9, abs_tol=1e-15))
        gap = abs(biv.value - value)
        diag["bivariate"] = biv.value
        diag["route_gap"] = gap
        if biv.converged and gap > _ROUTE_RTOL * max(abs(value), 1e-12) + biv.error_estimate + err:
            raise ConsistencyError(f"outage routes disagree: {value:.10g} vs {biv.value:.10g}")
    return MetricResult(min(max(value, 0.0), 1.0), err, f1.converged and f2.converged, diag)


# ----------------------------------------------------------------------------
# asymptotics
# ----------------------------------------------------------------------------


def _check_ties(exps: dict, what: str):
    items = sorted(exps.items(), key=lambda kv: kv[1])
    for (n1, e1), (n2, e2) in zip(items, items[1:]):
        if abs(e1 - e2) < _TIE * max(1.0, e1):
            raise DegeneracyError(f"{what} exponents {n1} and {n2} coincide at {e1:.6g} (double pole)")


def _asymptotic_terms(sys: RelaySystem) -> CsiAsymptoticTerms:
    fso, rf = sys.fso, sys.rf
    d = malaga_derive(fso)
    xi2, a, r = fso.xi**2, fso.alpha, float(fso.r)
    Nm, kap = rf.shape, rf.kappa
    kmin = 1 + next(i for i, w in enumerate(d.weights) if w > 0)
    psi = [Nm, kap, xi2 / r, a / r, kmin / r]
    coef = [0.0] * 5
    terms = []

    # RF hop: P(gamma_2 < x) ~ -sum residues of the CCDF kernel at its kappa and Nm poles
    _check_ties({"Nm": Nm, "kappa": kap}, "RF")
    t_spec, lognorm, _ = _sir_kernel(sys)
    for idx, j in ((0, 2), (1, 1)):
        e = psi[idx]
        if e >= min(Nm, kap) + 1.0:
            continue
        c = -_residue_term(t_spec, j, 0, -e, 0.0, -lognorm)
        coef[idx] = c
        terms.append({"k": None, "branch": _LABELS[idx], "exponent": e, "coef": c})

    # FSO hop: CDF kernel poles at xi^2/r, alpha/r and k/r
    for (w, spec) in fso_terms(fso, "cdf"):
        lower = spec.lower
        k = lower[2].shift
        exps = {"xi2_over_r": xi2 / r, "alpha_over_r": a / r, "k_over_r": k / r}
        cutoff = min((xi2 + 1) / r, (a + 1) / r, (k + 1) / r)
        _check_ties({n: e for n, e in exps.items() if e < cutoff}, "FSO")
        for j, label in enumerate(("xi2_over_r", "alpha_over_r", "k_over_r")):
            e = exps[label]
            if e >= cutoff:
                continue
            c = w * _residue_term(spec, j, 0, -e, 0.0)
            terms.append({"k": int(k), "branch": label, "exponent": e, "coef": c})
            if label == "k_over_r":
                if abs(e - psi[4]) <= _TIE:
                    coef[4] += c
            else:
                coef[2 + j] += c
    zeta = [p * c for p, c in zip(psi, coef)]
    return CsiAsymptoticTerms(psi=psi, zeta=zeta, terms=terms)


def outage_asymptotic_csi(sys: RelaySystem, gamma_th: float):
    """High-SNR form of the bound; returns (MetricResult, CsiAsymptoticTerms).

    The result value sums every retained term.  ``diagnostics['dominant']``
    keeps only the terms at the smallest exponent.
    """
    _require_csi(sys)
    if not gamma_th > 0:
        raise SpecError("gamma_th must be positive")
    at = _asymptotic_terms(sys)
    d = malaga_derive(sys.fso)
    u_fso = d.B**sys.fso.r * gamma_th / d.mu_r
    u_rf = sys.sir_scale * gamma_th
    total, dominant = 0.0, 0.0
    emin = min(t["exponent"] for t in at.terms)
    for t in at.terms:
        u = u_rf if t["branch"] in ("Nm", "kappa") else u_fso
        v = t["coef"] * u ** t["exponent"]
        total += v
        if abs(t["exponent"] - emin) <= _TIE * max(1.0, emin):
            dominant += v
    diag = {"min_exponent": emin, "dominant": dominant, "valid": max(u_fso, u_rf) < 1e-2}
    return MetricResult(float(total), 0.0, True, diag), at


# ----------------------------------------------------------------------------
# error rate
# ----------------------------------------------------------------------------


def avg_ber_csi(sys: RelaySystem, mod: ModulationScheme, contour: ContourSpec | None = None) -> MetricResult:
    """Average error rate over the min bound: phi n / 2 minus a sum of double integrals.

    int x^{p-1} e^{-q x} F1c F2c dx turns into a double Mellin-Barnes integral
    with the coupling Gamma(p - s - t); both variables are inverted so the
    coupling has positive scales.
    """
    _require_csi(sys)
    contour = contour or bivariate_contour(rel_tol=1e-9, abs_tol=1e-15)
    d = malaga_derive(sys.fso)
    t_spec, lognorm, c = _sir_kernel(sys)
    t_flip = flip(t_spec)
    terms = fso_terms(sys.fso, "ccdf")
    scale = mod.phi / (2.0 * math.exp(gammaln(mod.p)))
    parts, weights = [], []
    for qj in mod.q:
        X = d.B**sys.fso.r / (d.mu_r * qj)
        for w, s_spec in terms:
            spec = BivariateFoxHSpec(flip(s_spec), t_flip, [(mod.p, 1.0, 1.0)])
            parts.append(fox_h_bivariate(spec, 1.0 / X, qj / c, contour, -lognorm))
            weights.append(-scale * w)
    res = combine(parts, weights)
    top = mod.phi * mod.n / 2.0
    value = top + res.value
    return MetricResult(min(max(value, 0.0), top), res.error_estimate, res.converged, res.diagnostics)


def avg_ber_csi_via_cdf(sys: RelaySystem, mod: ModulationScheme, rel_tol: float = 1e-7) -> float:
    """Same error rate by direct quadrature of the bound CDF."""
    _require_csi(sys)
    return avg_ber_via_cdf(lambda x: outage_bound(sys, x, cross_check=False).value if x > 0 else 0.0, mod, rel_tol)


# ----------------------------------------------------------------------------
# capacity
# ----------------------------------------------------------------------------


def _laplace(spec: FoxHSpec) -> FoxHSpec:
    """Spec L with int e^{-s x} spec[A x] dx = L[A / s] / s."""
    return FoxHSpec(spec.m, spec.n + 1, [(0.0, 1.0)] + [(g.shift, g.scale) for g in spec.upper], spec.lower)


def cmgf_fso(sys: RelaySystem, s: float, contour: ContourSpec | None = None) -> MetricResult:
    """int_0^inf e^{-s x} P(gamma_1 > x) dx."""
    if not s > 0:
        raise SpecError("s must be positive")
    d = malaga_derive(sys.fso)
    X = d.B**sys.fso.r / d.mu_r
    terms = fso_terms(sys.fso, "ccdf")
    res = combine([fox_h(_laplace(sp), X / s, contour) for _, sp in terms], [w / s for w, _ in terms])
    return res


def cmgf_sir(sys: RelaySystem, s: float, contour: ContourSpec | None = None, shadowing: bool = True) -> MetricResult:
    """int_0^inf e^{-s x} P(gamma_2 > x) dx."""
    if not s > 0:
        raise SpecError("s must be positive")
    spec, lognorm, c = _sir_kernel(sys, shadowing)
    g = fox_h(_laplace(spec), c / s, contour, -lognorm)
    return MetricResult(g.value / s, g.error_estimate / s, g.converged, g.diagnostics)


def capacity_via_cmgf(
    sys: RelaySystem,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-12,
    shadowing: bool = True,
) -> MetricResult:
    """Exact ergodic capacity from the two CMGFs by adaptive quadrature in log s."""
    _require_csi(sys)
    failures = []

    def f(u):
        s = math.exp(u)
        m1 = cmgf_fso(sys, s)
        m2 = cmgf_sir(sys, s, shadowing=shadowing)
        if not (m1.converged and m2.converged):
            failures.append(s)
        return s * s * math.exp(-s) * m1.value * m2.value

    # below e^-30 the integrand is O(s^2); above e^4 the e^{-s} factor has killed it
    lo, hi = -30.0, 4.5
    val, err = integrate.quad(f, lo, hi, epsrel=rel_tol, epsabs=abs_tol, limit=200)
    norm = 1.0 / (2.0 * math.log(2.0))
    converged = not failures and err <= max(abs_tol, 10 * rel_tol * abs(val))
    if failures and err > 1e-6 * abs(val):
        raise ConvergenceError(f"CMGF evaluation failed at {len(failures)} nodes")
    return MetricResult(float(val * norm), float(err * norm), bool(converged), {"failed_nodes": len(failures)})


def _capacity_bivariate(sys: RelaySystem, contour: ContourSpec | None, shadowing: bool) -> MetricResult:
    contour = contour or bivariate_contour(rel_tol=1e-8, abs_tol=1e-14)
    d = malaga_derive(sys.fso)
    X = d.B**sys.fso.r / d.mu_r
    t_spec, lognorm, c = _sir_kernel(sys, shadowing)
    t_lap = _laplace(t_spec)
    terms = fso_terms(sys.fso, "ccdf")
    norm = 1.0 / (2.0 * math.log(2.0))
    parts = [
        fox_h_bivariate(BivariateFoxHSpec(_laplace(s), t_lap, [(0.0, 1.0, 1.0)]), X, c, contour, -lognorm)
        for _, s in terms
    ]
    res = combine(parts, [w * norm for w, _ in terms])
    res.value = max(res.value, 0.0)
    return res


def capacity_csi(sys: RelaySystem, contour: ContourSpec | None = None) -> MetricResult:
    """Exact ergodic capacity E[log2(1 + gamma)] / 2 as one double Mellin-Barnes integral per mixture term.

    Holds for both detection types since only the hop CMGFs enter.
    """
    _require_csi(sys)
    return _capacity_bivariate(sys, contour, True)


def capacity_csi_nakagami(sys: RelaySystem, contour: ContourSpec | None = None) -> MetricResult:
    """Capacity with unshadowed Nakagami desired and interfering links (kappa, kappa_I -> infinity)."""
    _require_csi(sys)
    return _capacity_bivariate(sys, contour, False)
