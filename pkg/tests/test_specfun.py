import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import kv

from foxlink.errors import CoincidingPoleError, ContourError, DegeneracyError, DivergenceError, PoleError, SpecError
from foxlink.specfun import (
    BivariateFoxHSpec,
    ContourSpec,
    FoxHSpec,
    MeijerGSpec,
    bivariate_contour,
    fox_h,
    fox_h_bivariate,
    leading_term,
    log_gamma,
    meijer_g,
    residue_series,
)

TIGHT = ContourSpec(rel_tol=1e-11, abs_tol=1e-300)


def malaga_cdf_kernel(r, xi2=1.21, alpha=5.4, k=3):
    return FoxHSpec(3, 1, [(1.0, r), (xi2 + 1, r)], [(xi2, r), (alpha, r), (k, r), (0.0, r)])


def test_log_gamma_values():
    assert abs(log_gamma(1.0)) < 1e-15
    assert log_gamma(0.5).real == pytest.approx(0.5723649429247001, rel=1e-14)
    # mpmath.loggamma(3+4j) at 30 digits
    z = log_gamma(3 + 4j)
    assert z.real == pytest.approx(-1.7566267846037841, rel=1e-13)
    assert z.imag == pytest.approx(4.742664438034658, rel=1e-13)


def test_log_gamma_principal_branch_far_left():
    # the principal branch is continuous across the negative real axis away from poles
    z = np.array([-20.5 + 1e-3j, -20.5 - 1e-3j])
    v = log_gamma(z)
    assert v[0].imag == pytest.approx(-v[1].imag)
    assert math.exp(v[0].real) == pytest.approx(abs(math.gamma(-20.5)), rel=1e-6)


@pytest.mark.parametrize("z", [0.0, -1.0, -7.0])
def test_log_gamma_poles(z):
    with pytest.raises(PoleError):
        log_gamma(z)


def test_exponential_identity():
    spec = FoxHSpec(1, 0, [], [(0.0, 1.0)])
    r = fox_h(spec, 1.0)
    assert r.converged
    assert r.value == pytest.approx(math.exp(-1.0), rel=1e-9)


def test_meijer_exponential_and_bessel():
    assert meijer_g(MeijerGSpec.from_lists(1, 0, [], [0.0]), 2.0).value == pytest.approx(math.exp(-2.0), rel=1e-9)
    v = meijer_g(MeijerGSpec.from_lists(2, 0, [], [1.5, 0.5]), 1.0, TIGHT).value
    assert v == pytest.approx(2.0 * kv(1.0, 2.0), rel=1e-10)


@pytest.mark.parametrize(
    "r, x, expected",
    [
        (1.0, 0.01, 0.02234108853374596),
        (1.0, 1.0, 5.70170111548634),
        (1.0, 10.0, 50.53044746398739),
        (2.0, 0.01, 0.18105499714838133),
        (2.0, 1.0, 2.85085055774317),
        (2.0, 10.0, 10.05971646604048),
    ],
)
def test_malaga_kernel_against_reference(r, x, expected):
    # reference: mpmath contour quadrature of the same Mellin-Barnes integrand at 30 digits
    spec = malaga_cdf_kernel(r)
    assert fox_h(spec, x, TIGHT).value == pytest.approx(expected, rel=1e-10)
    assert residue_series(spec, x, max_terms=400, rel_tol=1e-14).value == pytest.approx(expected, rel=1e-10)


def test_residue_exponential_series():
    r = residue_series(FoxHSpec(1, 0, [], [(0.0, 1.0)]), 1.0)
    assert r.converged
    assert r.value == pytest.approx(math.exp(-1.0), rel=1e-13)


def test_coinciding_poles():
    spec = FoxHSpec(2, 0, [], [(0.0, 1.0), (0.0, 1.0)])
    with pytest.raises(CoincidingPoleError):
        residue_series(spec, 0.5)
    # G^{2,0}_{0,2}(x | 0, 0) = 2 K_0(2 sqrt x).  Residue pairs of size 1/eps cancel,
    # so the perturbed series keeps about four digits.
    r = residue_series(spec, 0.5, perturb=True)
    assert r.diagnostics["perturbed"]
    assert r.value == pytest.approx(2.0 * kv(0.0, 2.0 * math.sqrt(0.5)), rel=2e-4)


def test_leading_term():
    assert leading_term(FoxHSpec(1, 0, [], [(0.0, 1.0)])) == pytest.approx((0.0, 1.0))
    c, lam = leading_term(FoxHSpec(2, 0, [], [(1.0, 1.0), (2.0, 1.0)]))
    assert (c, lam) == pytest.approx((1.0, 1.0))
    x = 1e-6
    h = fox_h(FoxHSpec(2, 0, [], [(1.0, 1.0), (2.0, 1.0)]), x, TIGHT).value
    assert h == pytest.approx(lam * x**c, rel=1e-4)


def test_leading_term_fso_kernel_exponent():
    # pointing term dominates when xi^2 is below alpha and every k
    spec = FoxHSpec(3, 0, [(1.21 + 1, 2.0)], [(1.21, 2.0), (5.4, 2.0), (2.0, 2.0)])
    c, _ = leading_term(spec)
    assert c == pytest.approx(1.21 / 2.0)


def test_leading_term_tie():
    with pytest.raises(DegeneracyError):
        leading_term(FoxHSpec(2, 0, [], [(1.0, 1.0), (2.0, 2.0)]))


def test_contour_separation_error():
    with pytest.raises(ContourError):
        FoxHSpec(1, 1, [(2.0, 1.0)], [(0.0, 1.0)])


def test_bad_orders():
    with pytest.raises(SpecError):
        FoxHSpec(2, 0, [], [(0.0, 1.0)])
    with pytest.raises(SpecError):
        FoxHSpec(1, 0, [], [(0.0, -1.0)])
    with pytest.raises(SpecError):
        fox_h(FoxHSpec(1, 0, [], [(0.0, 1.0)]), 0.0)


def test_meijer_rejects_non_unit_scale():
    with pytest.raises(SpecError):
        MeijerGSpec(1, 0, [], [(0.0, 2.0)])


def test_separable_bivariate_is_product():
    ks = FoxHSpec(1, 0, [], [(0.5, 1.0)])
    kt = FoxHSpec(2, 0, [], [(1.5, 1.0), (0.5, 1.0)])
    spec = BivariateFoxHSpec(ks, kt)
    got = fox_h_bivariate(spec, 1.0, 1.0, bivariate_contour(rel_tol=1e-9))
    want = fox_h(ks, 1.0).value * fox_h(kt, 1.0).value
    assert got.value == pytest.approx(want, rel=1e-7)
    assert got.value == pytest.approx(math.exp(-1.0) * 2.0 * kv(1.0, 2.0), rel=1e-7)


def test_bivariate_with_joint_factor():
    # Gamma(-s) Gamma(-t) Gamma(a+s+t) X^-s Y^-t integrates to Gamma(a) (1 + 1/X + 1/Y)^-a
    a = 2.0
    ker = FoxHSpec(0, 1, [(1.0, 1.0)], [])
    spec = BivariateFoxHSpec(ker, ker, joint_num=[(a, 1.0, 1.0)])
    for X, Y in [(1.0, 1.0), (0.5, 3.0), (10.0, 0.2)]:
        got = fox_h_bivariate(spec, X, Y, bivariate_contour(rel_tol=1e-9))
        assert got.converged
        assert got.value == pytest.approx(math.gamma(a) * (1 + 1 / X + 1 / Y) ** -a, rel=1e-7)


def test_result_diagnostics():
    r = fox_h(FoxHSpec(1, 0, [], [(0.0, 1.0)]), 1.0)
    d = r.to_dict()
    assert d["converged"] is True
    assert d["error_estimate"] <= 1e-6


def test_max_evals_reports_non_convergence():
    r = fox_h(malaga_cdf_kernel(1.0), 1.0, ContourSpec(rel_tol=1e-15, abs_tol=1e-300, max_evals=50))
    assert not r.converged


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def test_reduction_fox_to_meijer_grid():
    a, b = [0.4], [0.2, 0.9, 1.3]
    hs = FoxHSpec(2, 1, [(v, 2.0) for v in a], [(v, 2.0) for v in b])
    gs = MeijerGSpec.from_lists(2, 1, a, b)
    for x in np.logspace(-3, 2, 12):
        assert fox_h(hs, x, TIGHT).value == pytest.approx(0.5 * meijer_g(gs, math.sqrt(x), TIGHT).value, rel=1e-9)


def test_meijer_and_fox_agree_on_unit_scales():
    gs = MeijerGSpec.from_lists(2, 1, [0.4], [0.2, 0.9, 1.3])
    hs = FoxHSpec(gs.m, gs.n, gs.upper, gs.lower)
    for x in np.logspace(-3, 3, 7):
        g, h = meijer_g(gs, x), fox_h(hs, x)
        assert abs(g.value - h.value) <= g.error_estimate + h.error_estimate + 1e-14


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------


@st.composite
def separable_specs(draw):
    m = draw(st.integers(1, 3))
    n = draw(st.integers(0, 1))
    lower = [(draw(st.floats(0.1, 2.5)), draw(st.floats(0.5, 2.0))) for _ in range(m)]
    upper = [(draw(st.floats(-1.0, 0.5)), draw(st.floats(0.5, 2.0))) for _ in range(n)]
    return FoxHSpec(m, n, upper, lower)


@settings(max_examples=25, deadline=None)
@given(spec=separable_specs(), x=st.floats(0.05, 20.0), sigma=st.floats(-0.05, 1.5))
def test_mellin_shift_property(spec, x, sigma):
    base = fox_h(spec, x)
    shifted = fox_h(spec.shifted(sigma), x)
    assert base.converged and shifted.converged
    want = x**sigma * base.value
    assert shifted.value == pytest.approx(want, rel=1e-6, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(spec=separable_specs(), x=st.floats(0.05, 5.0))
def test_residues_match_contour(spec, x):
    if spec.mu < 0:
        with pytest.raises(DivergenceError):
            residue_series(spec, x)
        return
    try:
        rs = residue_series(spec, x, max_terms=300)
    except (CoincidingPoleError, PoleError, DivergenceError):
        return
    c = fox_h(spec, x)
    if rs.converged:
        assert rs.value == pytest.approx(c.value, rel=1e-6, abs=1e-10)
    # the error estimate is honest either way
    assert abs(rs.value - c.value) <= 10 * (rs.error_estimate + c.error_estimate) + 1e-9 * abs(c.value)


@settings(max_examples=20, deadline=None)
@given(b=st.floats(0.0, 3.0), B=st.floats(0.4, 2.5), x=st.floats(1e-3, 4.0))
def test_exponential_family_with_scale(b, B, x):
    # H^{1,0}_{0,1}[x | (b, B)] = x^{b/B} exp(-x^{1/B}) / B
    want = x ** (b / B) * math.exp(-(x ** (1.0 / B))) / B
    assert fox_h(FoxHSpec(1, 0, [], [(b, B)]), x, TIGHT).value == pytest.approx(want, rel=1e-8)


def test_residue_with_cancelled_pole():
    # Gamma(s) Gamma(5+s) / Gamma(1+s) = Gamma(5+s) / s; residue at s = -5 is -1/5
    from foxlink.specfun import _residue_term

    spec = FoxHSpec(2, 0, [(1.0, 1.0)], [(0.0, 1.0), (5.0, 1.0)])
    assert _residue_term(spec, 1, 0, -5.0, 0.0) == pytest.approx(-0.2, rel=1e-13)
    assert _residue_term(spec, 1, 1, -6.0, 0.0) == pytest.approx(1.0 / 6.0, rel=1e-13)
