"""Gamma-family special functions and Mellin-Barnes integrals.

Conventions.  A univariate Fox H-function is

    H^{m,n}_{p,q}[x] = 1/(2 pi i) \\int_L Theta(s) x^{-s} ds,

    Theta(s) = prod_{j<=m} G(b_j + B_j s) prod_{j<=n} G(1 - a_j - A_j s)
               / (prod_{j>m} G(1 - b_j - B_j s) prod_{j>n} G(a_j + A_j s)),

with L a vertical line separating the poles of G(b_j + B_j s) (left) from
those of G(1 - a_j - A_j s) (right).  A bivariate H-function is the double
integral of Theta_S(s) Theta_T(t) J(s, t) x^{-s} y^{-t}, where J is a ratio
of Gamma functions whose arguments depend on s and t jointly.

Every integral is evaluated along straight vertical lines by adaptive
Gauss-Kronrod quadrature; all Gamma products are formed in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from . import _accel
from .errors import (
    CoincidingPoleError,
    ContourError,
    DegeneracyError,
    DivergenceError,
    FoxlinkError,
    PoleError,
    SpecError,
)
from .quadrature import gk_adaptive, gk_adaptive_2d

_POLE_EPS = 1e-12


def _is_pole(z, eps=_POLE_EPS):
    z = complex(z)
    return abs(z.imag) < eps and z.real < eps and abs(z.real - round(z.real)) < eps


# ----------------------------------------------------------------------------
# parameter blocks
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaPair:
    shift: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise SpecError(f"Gamma scale must be positive, got {self.scale}")


def _pairs(items) -> tuple[GammaPair, ...]:
    out = []
    for it in items:
        if isinstance(it, GammaPair):
            out.append(it)
        else:
            a, A = it
            out.append(GammaPair(float(a), float(A)))
    return tuple(out)


@dataclass(frozen=True)
class FoxHSpec:
    """Parameters of H^{m,n}_{p,q}; ``upper`` holds (a_j, A_j), ``lower`` (b_j, B_j)."""

    m: int
    n: int
    upper: tuple = ()
    lower: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "upper", _pairs(self.upper))
        object.__setattr__(self, "lower", _pairs(self.lower))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise SpecError(f"orders must satisfy 0<=m<=q, 0<=n<=p (m={self.m}, n={self.n}, p={self.p}, q={self.q})")
        if self.m + self.n == 0:
            raise SpecError("H-function with m = n = 0 vanishes identically")
        lo, hi = self.strip
        if not lo < hi:
            raise ContourError(f"left poles reach {lo:.6g}, right poles start at {hi:.6g}: no separating contour")

    @property
    def p(self) -> int:
        return len(self.upper)

    @property
    def q(self) -> int:
        return len(self.lower)

    @property
    def strip(self) -> tuple[float, float]:
        """Open interval of admissible contour abscissas."""
        lo = max((-g.shift / g.scale for g in self.lower[: self.m]), default=-math.inf)
        hi = min(((1.0 - g.shift) / g.scale for g in self.upper[: self.n]), default=math.inf)
        return lo, hi

    @property
    def mu(self) -> float:
        return sum(g.scale for g in self.lower) - sum(g.scale for g in self.upper)

    @property
    def a_star(self) -> float:
        """Exponential decay rate parameter of Theta along vertical lines."""
        return (
            sum(g.scale for g in self.upper[: self.n])
            - sum(g.scale for g in self.upper[self.n :])
            + sum(g.scale for g in self.lower[: self.m])
            - sum(g.scale for g in self.lower[self.m :])
        )

    def factors(self):
        """(shift, coef, sign) arrays such that log Theta(s) = sum sign*lnG(shift + coef*s)."""
        sh, cf, sg = [], [], []
        for j, g in enumerate(self.lower):
            if j < self.m:
                sh.append(g.shift), cf.append(g.scale), sg.append(1.0)
            else:
                sh.append(1.0 - g.shift), cf.append(-g.scale), sg.append(-1.0)
        for j, g in enumerate(self.upper):
            if j < self.n:
                sh.append(1.0 - g.shift), cf.append(-g.scale), sg.append(1.0)
            else:
                sh.append(g.shift), cf.append(g.scale), sg.append(-1.0)
        return np.array(sh, float), np.array(cf, float), np.array(sg, float)

    def log_theta(self, s):
        sh, cf, sg = self.factors()
        return _accel.log_kernel(sh, cf, np.zeros_like(cf), sg, s, 0.0)

    def shifted(self, sigma: float) -> "FoxHSpec":
        """Spec whose value is x**sigma times this one (Mellin shift)."""
        return FoxHSpec(
            self.m,
            self.n,
            [(g.shift + sigma * g.scale, g.scale) for g in self.upper],
            [(g.shift + sigma * g.scale, g.scale) for g in self.lower],
        )


class MeijerGSpec(FoxHSpec):
    """Fox H-function with every scale equal to one."""

    def __post_init__(self):
        super().__post_init__()
        if any(g.scale != 1.0 for g in self.upper + self.lower):
            raise SpecError("Meijer G parameters must have unit scales")

    @classmethod
    def from_lists(cls, m: int, n: int, a: Sequence[float] = (), b: Sequence[float] = ()):
        return cls(m, n, [(x, 1.0) for x in a], [(x, 1.0) for x in b])


@dataclass(frozen=True)
class JointGamma:
    """Gamma(shift + scale_s*s + scale_t*t)."""

    shift: float
    scale_s: float
    scale_t: float

    def __post_init__(self):
        if not (self.scale_s > 0 and self.scale_t > 0):
            raise SpecError("joint Gamma scales must be positive")


@dataclass(frozen=True)
class BivariateFoxHSpec:
    """Double Mellin-Barnes integrand Theta_S(s) Theta_T(t) J(s,t).

    ``joint_num`` / ``joint_den`` hold the coupled Gamma factors of J in the
    numerator / denominator.  The kernels are ordinary univariate specs.
    """

    kernel_s: FoxHSpec
    kernel_t: FoxHSpec
    joint_num: tuple = ()
    joint_den: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "joint_num", tuple(j if isinstance(j, JointGamma) else JointGamma(*j) for j in self.joint_num))
        object.__setattr__(self, "joint_den", tuple(j if isinstance(j, JointGamma) else JointGamma(*j) for j in self.joint_den))
        self.contour_rectangle()  # validates

    @property
    def orders(self):
        ks, kt = self.kernel_s, self.kernel_t
        n1 = len(self.joint_num)
        return ((0, n1, n1 + len(self.joint_den), 0), (ks.m, ks.n, ks.p, ks.q), (kt.m, kt.n, kt.p, kt.q))

    def _constraints(self):
        """Rows (shift, coef_s, coef_t): each numerator argument must have positive real part."""
        rows = []
        for spec, col in ((self.kernel_s, 0), (self.kernel_t, 1)):
            sh, cf, sg = spec.factors()
            for a, c, g in zip(sh, cf, sg):
                if g > 0:
                    rows.append((a, c, 0.0) if col == 0 else (a, 0.0, c))
        for j in self.joint_num:
            rows.append((j.shift, j.scale_s, j.scale_t))
        return np.array(rows, float)

    def log_integrand_real(self, cs, ct, logx=0.0, logy=0.0):
        """log of the integrand on the real axis (tau_s = tau_t = 0)."""
        total = -cs * logx - ct * logy
        for spec, c in ((self.kernel_s, cs), (self.kernel_t, ct)):
            sh, cf, sg = spec.factors()
            total += float(np.sum(sg * _accel.loggamma((sh + cf * c).astype(complex)).real))
        for sgn, group in ((1.0, self.joint_num), (-1.0, self.joint_den)):
            for j in group:
                total += sgn * float(_accel.loggamma(np.array([j.shift + j.scale_s * cs + j.scale_t * ct + 0j]))[0].real)
        return total

    def contour_rectangle(self, cs=None, ct=None, x=None, y=None):
        """Abscissas (c_s, c_t) of a pole-free contour rectangle.

        The largest uniform pole clearance is found by linear programming.
        When x and y are given, the point is then moved towards the real-axis
        saddle of the integrand while keeping at least a quarter of that
        clearance.
        """
        rows = self._constraints()
        if cs is not None and ct is not None:
            margin = rows[:, 0] + rows[:, 1] * cs + rows[:, 2] * ct
            if np.any(margin <= 0):
                raise ContourError(f"contour ({cs}, {ct}) crosses a pole")
            return float(cs), float(ct)
        norm = np.abs(rows[:, 1]) + np.abs(rows[:, 2])
        # variables (c_s, c_t, d, |c_s|, |c_t|): maximise d s.t. shift + coef.c >= d*norm,
        # with a small pull towards the origin to make the optimum unique
        k = len(rows)
        A_ub = np.vstack(
            [
                np.column_stack([-rows[:, 1], -rows[:, 2], norm, np.zeros(k), np.zeros(k)]),
                [[1, 0, 0, -1, 0], [-1, 0, 0, -1, 0], [0, 1, 0, 0, -1], [0, -1, 0, 0, -1]],
            ]
        )
        b_ub = np.concatenate([rows[:, 0], np.zeros(4)])
        res = linprog(
            [0, 0, -1, 1e-4, 1e-4],
            A_ub=A_ub,
            b_ub=b_ub,
            bounds=[(-200, 200), (-200, 200), (None, 1.0), (0, None), (0, None)],
            method="highs",
        )
        if not res.success or res.x[2] <= 1e-9:
            raise ContourError("no joint contour rectangle avoids every pole")
        start = res.x[:2]
        if x is None or y is None:
            return float(start[0]), float(start[1])
        keep = 0.25 * res.x[2]
        lx, ly = math.log(x), math.log(y)
        cons = {"type": "ineq", "fun": lambda c: rows[:, 0] + rows[:, 1:] @ c - keep * norm, "jac": lambda c: rows[:, 1:]}
        opt = minimize(
            lambda c: self.log_integrand_real(c[0], c[1], lx, ly),
            start,
            method="SLSQP",
            constraints=[cons],
            bounds=[(start[0] - 200, start[0] + 200), (start[1] - 200, start[1] + 200)],
        )
        c = opt.x if np.all(rows[:, 0] + rows[:, 1:] @ opt.x > 0.5 * keep * norm) else start
        if self.log_integrand_real(c[0], c[1], lx, ly) > self.log_integrand_real(start[0], start[1], lx, ly):
            c = start
        return float(c[0]), float(c[1])


@dataclass
class ContourSpec:
    real_part_s: float | None = None
    real_part_t: float | None = None
    truncation: float | None = None
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_evals: int = 200_000
    drop: float = 30.0

    def __post_init__(self):
        if self.truncation is not None and not self.truncation > 0:
            raise SpecError("truncation must be positive")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise SpecError("tolerances must be positive")
        if self.max_evals <= 0:
            raise SpecError("max_evals must be positive")


def bivariate_contour(**kw) -> ContourSpec:
    kw.setdefault("rel_tol", 1e-6)
    kw.setdefault("abs_tol", 1e-14)
    kw.setdefault("max_evals", 2_000_000)
    return ContourSpec(**kw)


@dataclass
class MetricResult:
    value: float
    error_estimate: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)

    def to_dict(self):
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "converged": self.converged,
            **{k: v for k, v in self.diagnostics.items() if isinstance(v, (int, float, str, bool, list, tuple))},
        }


def combine(results, weights=None, **diag) -> MetricResult:
    """Weighted sum of independent MetricResults."""
    results = list(results)
    if weights is None:
        weights = [1.0] * len(results)
    value = sum(w * r.value for w, r in zip(weights, results))
    err = sum(abs(w) * r.error_estimate for w, r in zip(weights, results))
    evals = sum(r.diagnostics.get("evals", 0) for r in results)
    return MetricResult(float(value), float(err), all(r.converged for r in results), {"evals": evals, "terms": len(results), **diag})


# ----------------------------------------------------------------------------
# log Gamma
# ----------------------------------------------------------------------------


def log_gamma(z):
    """Principal-branch log Gamma of a complex scalar or array."""
    arr = np.asarray(z, dtype=np.complex128)
    if np.any([_is_pole(v) for v in arr.ravel()]):
        raise PoleError(f"Gamma has a pole at {z}")
    out = _accel.loggamma(arr.reshape(-1)).reshape(arr.shape)
    return complex(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# univariate contour integral
# ----------------------------------------------------------------------------


def _choose_abscissa(spec: FoxHSpec, logx: float, requested=None) -> float:
    lo, hi = spec.strip
    if math.isfinite(lo) and math.isfinite(hi):
        gap = hi - lo
        a, b = lo + 0.1 * gap, hi - 0.1 * gap
        if requested is not None:
            return min(max(requested, a), b)
    else:
        if requested is not None:
            if not lo < requested < hi:
                raise ContourError(f"requested abscissa {requested} outside strip ({lo}, {hi})")
            return float(requested)
        if math.isfinite(lo):
            a, b = lo + 0.05, lo + 60.0
        else:
            a, b = hi - 60.0, hi - 0.05
    # minimise the real-axis magnitude: keeps the integrand comparable to the
    # result, so the line integral carries little cancellation

    def phi(c):
        return float(spec.log_theta(np.array([c + 0j]))[0].real) - c * logx

    res = minimize_scalar(phi, bounds=(a, b), method="bounded", options={"xatol": 1e-3})
    return float(res.x)


def _truncate_1d(logmag, drop, start=32.0, cap=2.0**15):
    """Smallest T such that logmag(tau) < peak - drop for tau >= T on a sampled grid."""
    T = start
    while True:
        tau = np.linspace(0.0, T, 257)
        lm = logmag(tau)
        lm = np.where(np.isfinite(lm), lm, -np.inf)
        peak = lm.max()
        above = np.nonzero(lm > peak - drop)[0]
        last = above[-1]
        if last < len(tau) - 8 or T >= cap:
            cut = min(last + 2, len(tau) - 1)
            return tau[cut], peak, lm[cut], last >= len(tau) - 8
        T *= 2.0


def flip(spec: FoxHSpec) -> FoxHSpec:
    """Spec G with G[1/x] = spec[x] (inversion of the argument)."""
    return FoxHSpec(
        spec.n,
        spec.m,
        [(1.0 - g.shift, g.scale) for g in spec.lower],
        [(1.0 - g.shift, g.scale) for g in spec.upper],
    )


_FAR = 25.0


def _far_field(spec: FoxHSpec, x: float, contour: ContourSpec, log_scale: float = 0.0):
    """Residue evaluation for arguments where the contour integrand oscillates fast."""
    logx = math.log(x)
    try:
        if logx < 0 and spec.m > 0:
            res = residue_series(spec, x, max_terms=80, rel_tol=contour.rel_tol, log_scale=log_scale)
        elif logx > 0 and spec.n > 0:
            res = residue_series(flip(spec), 1.0 / x, max_terms=80, rel_tol=contour.rel_tol, log_scale=log_scale)
        else:
            return None
    except FoxlinkError:
        return None
    tol = max(contour.abs_tol, contour.rel_tol * abs(res.value))
    if res.converged and res.error_estimate <= tol:
        return res
    return None


def fox_h(spec: FoxHSpec, x: float, contour: ContourSpec | None = None, log_scale: float = 0.0) -> MetricResult:
    """exp(log_scale) * H^{m,n}_{p,q}[x] by quadrature along a vertical line.

    Folding a large normaliser into ``log_scale`` keeps the integrand finite
    when the Gamma products themselves overflow.

    Far from x = 1 the line integrand oscillates quickly; there the residue
    series is tried first and used when it converges.
    """
    if not x > 0:
        raise SpecError("x must be positive")
    contour = contour or ContourSpec()
    logx = math.log(x)
    if abs(logx) > _FAR and contour.real_part_s is None:
        res = _far_field(spec, x, contour, log_scale)
        if res is not None:
            return res
    c = _choose_abscissa(spec, logx, contour.real_part_s)
    sh, cf, sg = spec.factors()
    zeros = np.zeros_like(cf)

    def logf(tau):
        s = c + 1j * np.asarray(tau, float)
        return _accel.log_kernel(sh, cf, zeros, sg, s, 0.0) - s * logx + log_scale

    def f(tau):
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.exp(logf(tau))
        return np.where(np.isfinite(v), v.real, 0.0)

    drop = contour.drop
    evals = 0
    for _attempt in range(4):
        if contour.truncation is not None:
            T = contour.truncation
            lm = logf(np.array([0.0, T])).real
            peak, edge, hit_cap = lm[0], lm[1], False
        else:
            T, peak, edge, hit_cap = _truncate_1d(lambda t: logf(t).real, drop)
        q = gk_adaptive(f, 0.0, T, rel_tol=contour.rel_tol, abs_tol=contour.abs_tol * math.pi, max_evals=contour.max_evals - evals)
        evals += q.evals
        value = q.value / math.pi
        # tail beyond T bounded by the edge magnitude times one decay length
        slope = (edge - peak) / T if T > 0 else -1.0
        tail = math.exp(min(edge, 700.0)) / max(-slope, 1.0 / T) / math.pi if np.isfinite(edge) else 0.0
        err = q.error / math.pi + tail
        tol = max(contour.abs_tol, contour.rel_tol * abs(value))
        if tail <= 0.1 * tol or contour.truncation is not None or hit_cap:
            break
        drop += math.log(tail / (0.1 * tol)) + 2.0
    converged = bool(q.converged and err <= tol and not hit_cap)
    return MetricResult(
        float(value),
        float(err),
        converged,
        {"contour_s": c, "truncation": float(T), "evals": evals, "drop": drop},
    )


def meijer_g(spec: MeijerGSpec, x: float, contour: ContourSpec | None = None) -> MetricResult:
    if not isinstance(spec, MeijerGSpec):
        raise SpecError("meijer_g expects a MeijerGSpec")
    return fox_h(spec, x, contour)


# ----------------------------------------------------------------------------
# residues
# ----------------------------------------------------------------------------


def _left_poles(spec: FoxHSpec, count: int):
    poles = []
    for j, g in enumerate(spec.lower[: spec.m]):
        for k in range(count):
            poles.append((-(g.shift + k) / g.scale, j, k))
    poles.sort(key=lambda p: -p[0])
    return poles[:count]


def _residue_term(spec: FoxHSpec, j: int, k: int, s: float, logx: float, log_scale: float = 0.0):
    """Residue of Theta(s) x^{-s} at the k-th pole of G(b_j + B_j s)."""
    sh, cf, sg = spec.factors()
    args = sh + cf * s
    keep = np.ones(len(sh), bool)
    keep[j] = False
    # other factors sitting on a pole: Gamma(c + C s) ~ (-1)^n / (n! C (s - s0))
    net, lead, sign = 0, 0.0, 1.0
    for idx in np.nonzero(keep)[0]:
        if _is_pole(args[idx], 1e-9):
            n = int(round(-args[idx].real))
            net += int(sg[idx])
            lead += sg[idx] * (-math.lgamma(n + 1) - math.log(abs(cf[idx])))
            sign *= (-1.0) ** n * (1.0 if cf[idx] > 0 else -1.0)
            keep[idx] = False
    if net > 0:
        raise CoincidingPoleError(f"pole s={s:.6g} is shared by two Gamma factors")
    if net < 0:
        return 0.0  # denominator infinite: residue vanishes
    keep[j] = False
    lg = np.sum(sg[keep] * _accel.loggamma(args[keep].astype(complex)))
    g = spec.lower[j]
    mag = lg + lead - math.lgamma(k + 1) - math.log(g.scale) - s * logx + log_scale
    return float((sign * (-1.0) ** k * np.exp(mag)).real)


def residue_series(
    spec: FoxHSpec, x: float, max_terms: int = 200, rel_tol: float = 1e-12, perturb: bool = False, log_scale: float = 0.0
) -> MetricResult:
    """Sum of residues at the left poles, nearest first.

    With ``perturb=True`` coinciding poles are handled by nudging the offending
    shift by +-1e-6 and averaging the two series.
    """
    if not x > 0:
        raise SpecError("x must be positive")
    if spec.mu < -1e-12:
        raise DivergenceError(f"residue series diverges (mu = {spec.mu:.4g} < 0)")
    if abs(spec.mu) <= 1e-12:
        # convergence radius prod A^-A prod B^B when mu = 0
        log_radius = sum(g.scale * math.log(g.scale) for g in spec.lower) - sum(g.scale * math.log(g.scale) for g in spec.upper)
        if math.log(x) >= log_radius:
            raise DivergenceError(f"residue series diverges for x = {x:.6g} >= radius {math.exp(log_radius):.6g} (mu = 0)")
    try:
        return _residue_series(spec, x, max_terms, rel_tol, log_scale)
    except CoincidingPoleError:
        if not perturb:
            raise
    results = []
    for eps in (1e-6, -1e-6):
        lower = list(spec.lower)
        seen = set()
        for j, g in enumerate(lower[: spec.m]):
            key = round(-g.shift / g.scale, 9) % 1.0
            if key in seen:
                lower[j] = GammaPair(g.shift + eps * (j + 1), g.scale)
            seen.add(key)
        results.append(_residue_series(FoxHSpec(spec.m, spec.n, spec.upper, lower), x, max_terms, rel_tol, log_scale))
    out = combine(results, [0.5, 0.5], perturbed=True)
    out.error_estimate += abs(results[0].value - results[1].value)
    return out


def _near_pole_sensitivity(spec: FoxHSpec, j: int, s: float) -> float:
    """Relative error of a residue caused by rounding in Gamma arguments close to a pole.

    An argument z computed with absolute error e changes log Gamma by about
    e / dist(z, pole), which matters when another factor sits near a pole.
    """
    sh, cf, _ = spec.factors()
    args = sh + cf * s
    mask = np.ones(len(sh), bool)
    mask[j] = False
    a = args[mask]
    rounding = 2.2e-16 * (np.abs(sh[mask]) + np.abs(cf[mask] * s) + 1.0)
    dist = np.where(a < 0.5, np.abs(a - np.round(a)), np.inf)
    return float(np.sum(rounding / np.maximum(dist, 1e-300)))


def _residue_series(spec, x, max_terms, rel_tol, log_scale=0.0):
    logx = math.log(x)
    total = 0.0
    terms = []
    sensitivity = 0.0
    for s, j, k in _left_poles(spec, max_terms):
        t = _residue_term(spec, j, k, s, logx, log_scale)
        terms.append(t)
        total += t
        if t != 0.0:
            # exp() of a log-magnitude carries its absolute rounding as relative error
            sensitivity += abs(t) * (_near_pole_sensitivity(spec, j, s) + 2.2e-16 * (8.0 + abs(s * logx) + abs(math.log(abs(t)))))
    nz = [abs(t) for t in terms if t != 0.0]
    tail = max(nz[-3:], default=0.0)
    growing = len(nz) > 10 and max(nz[-5:]) > max(nz[-10:-5]) and nz[-1] > 1e-300
    scale = max(nz, default=0.0)
    # roundoff from cancelling terms
    err = tail + sensitivity
    if not math.isfinite(total):
        raise DivergenceError("residue series overflowed")
    converged = (not growing) and err <= max(rel_tol * abs(total), 1e-13 * scale, 1e-300)
    return MetricResult(float(total), float(err), bool(converged), {"terms": len(terms), "largest_term": scale, "method": "residues"})


def leading_term(spec: FoxHSpec) -> tuple[float, float]:
    """(c, Lambda) with H[x] ~ Lambda x^c as x -> 0."""
    if spec.m == 0:
        raise SpecError("no left poles: H is not algebraic at the origin")
    ratios = [g.shift / g.scale for g in spec.lower[: spec.m]]
    jstar = int(np.argmin(ratios))
    c = ratios[jstar]
    ties = [j for j, r in enumerate(ratios) if j != jstar and abs(r - c) < 1e-10]
    if ties:
        raise DegeneracyError(f"leading exponent {c:.6g} attained by several Gamma factors")
    try:
        lam = _residue_term(spec, jstar, 0, -c, 0.0)
    except CoincidingPoleError as exc:
        raise DegeneracyError(str(exc)) from exc
    return float(c), float(lam)


# ----------------------------------------------------------------------------
# bivariate contour integral
# ----------------------------------------------------------------------------


def _truncate_2d(logmag, drop, start=(24.0, 24.0), cap=2.0**12):
    Ts, Tt = start
    while True:
        us = np.linspace(0.0, Ts, 97)
        vt = np.linspace(-Tt, Tt, 193)
        lm = logmag(us[:, None], vt[None, :])
        lm = np.where(np.isfinite(lm), lm, -np.inf)
        peak = lm.max()
        mask = lm > peak - drop
        iu = np.nonzero(mask.any(axis=1))[0]
        iv = np.nonzero(mask.any(axis=0))[0]
        grow_s = iu[-1] >= len(us) - 4
        grow_t = iv[0] <= 3 or iv[-1] >= len(vt) - 4
        if (not grow_s and not grow_t) or max(Ts, Tt) >= cap:
            Ts_cut = us[min(iu[-1] + 2, len(us) - 1)]
            lo = vt[max(iv[0] - 2, 0)]
            hi = vt[min(iv[-1] + 2, len(vt) - 1)]
            inside = (us[:, None] <= Ts_cut) & (vt[None, :] >= lo) & (vt[None, :] <= hi)
            edge = np.max(np.where(inside, -np.inf, lm)) if not inside.all() else peak - drop
            return Ts_cut, (lo, hi), peak, edge, max(Ts, Tt) >= cap and (grow_s or grow_t)
        if grow_s:
            Ts *= 2.0
        if grow_t:
            Tt *= 2.0


def fox_h_bivariate(
    spec: BivariateFoxHSpec, x: float, y: float, contour: ContourSpec | None = None, log_scale: float = 0.0
) -> MetricResult:
    """exp(log_scale) times the double Mellin-Barnes integral over a rectangle of vertical contours."""
    if not (x > 0 and y > 0):
        raise SpecError("x and y must be positive")
    contour = contour or bivariate_contour()
    cs, ct = spec.contour_rectangle(contour.real_part_s, contour.real_part_t, x, y)
    lx, ly = math.log(x), math.log(y)
    shs, cfs, sgs = spec.kernel_s.factors()
    sht, cft, sgt = spec.kernel_t.factors()
    jn = spec.joint_num + spec.joint_den
    shj = np.array([j.shift for j in jn], float)
    csj = np.array([j.scale_s for j in jn], float)
    ctj = np.array([j.scale_t for j in jn], float)
    sgj = np.array([1.0] * len(spec.joint_num) + [-1.0] * len(spec.joint_den))
    zs, zt = np.zeros_like(cfs), np.zeros_like(cft)

    def ls(u):
        s = cs + 1j * u
        return _accel.log_kernel(shs, cfs, zs, sgs, s, 0.0) - s * lx + log_scale

    def lt(v):
        t = ct + 1j * v
        return _accel.log_kernel(sht, cft, zt, sgt, t, 0.0) - t * ly

    def lj(u, v):
        if shj.size == 0:
            return np.zeros(np.broadcast(u, v).shape, complex)
        return _accel.log_kernel(shj, csj, ctj, sgj, cs + 1j * u, ct + 1j * v)

    cache_s, cache_t = {}, {}

    def cached(cache, fn, nodes):
        out = np.empty(nodes.shape, complex)
        for i, row in enumerate(nodes):
            key = (row[0], row[-1])
            hit = cache.get(key)
            if hit is None:
                hit = cache[key] = fn(row)
            out[i] = hit
        return out

    def f(un, vn):
        a = cached(cache_s, ls, un)
        b = cached(cache_t, lt, vn)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp(a[:, :, None] + b[:, None, :] + lj(un[:, :, None], vn[:, None, :]))
        return np.where(np.isfinite(val), val.real, 0.0)

    def logmag(u, v):
        return (ls(u) + lt(v) + lj(u, v)).real

    norm = 1.0 / (2.0 * math.pi**2)
    drop = contour.drop
    evals = 0
    for _attempt in range(3):
        Ts, (tlo, thi), peak, edge, hit_cap = _truncate_2d(logmag, drop)
        if contour.truncation is not None:
            Ts, tlo, thi = contour.truncation, -contour.truncation, contour.truncation
        q = gk_adaptive_2d(
            f,
            ((0.0, Ts), (tlo, thi)),
            rel_tol=contour.rel_tol,
            abs_tol=contour.abs_tol / norm,
            max_evals=contour.max_evals - evals,
        )
        evals += q.evals
        value = q.value * norm
        tail = math.exp(min(edge + math.log(norm * (Ts + thi - tlo)), 700.0)) if np.isfinite(edge) else 0.0
        err = q.error * norm + tail
        tol = max(contour.abs_tol, contour.rel_tol * abs(value))
        if tail <= 0.1 * tol or contour.truncation is not None or hit_cap:
            break
        drop += math.log(tail / (0.1 * tol)) + 2.0
    converged = bool(q.converged and err <= tol and not hit_cap)
    return MetricResult(
        float(value),
        float(err),
        converged,
        {"contour_s": cs, "contour_t": ct, "truncation": [float(Ts), float(tlo), float(thi)], "evals": evals, "drop": drop},
    )
