import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from foxlink.channels import (
    avg_power,
    cdf_fso,
    cdf_genk,
    cdf_sir,
    kappa_from_sigma_db,
    mean_fso_snr,
    path_loss_db,
    pdf_fso,
    pdf_genk,
    pdf_sir,
)
from foxlink.errors import SpecError
from foxlink.params import GenKParams, MalagaParams, PathLossParams, malaga_derive

MODERATE = MalagaParams(5.4, 4, xi=1.1, r=1, mu1=10.0)
STRONG_IMDD = MalagaParams(2.4, 2, xi=1.1, r=2, mu1=100.0)


def sir_cdf_beta_prime(desired, interf, x):
    """P(X/Y <= x) as a 1-d integral of beta-prime laws: independent of the Meijer-G route."""
    c = desired.kappa * desired.m * interf.meanPower / (interf.kappa * interf.m * desired.meanPower)
    a1, a3, k, ki = desired.shape, interf.shape, desired.kappa, interf.kappa
    lb = special.betaln(k, ki)

    def f(v):
        u = math.exp(v)
        t = c * x / u
        return math.exp(k * v - (k + ki) * math.log1p(u) - lb) * special.betainc(a1, a3, t / (1 + t))

    return integrate.quad(f, -60, 60, epsabs=1e-16, epsrel=1e-13, limit=500)[0]


# ---------------------------------------------------------------------------
# Malaga constants
# ---------------------------------------------------------------------------


def test_malaga_constants_table1_moderate():
    # closed-form constants re-evaluated with mpmath at 30 digits
    d = malaga_derive(MalagaParams(5.4, 4, b0=0.25, rho=0.75, Omega=0.5, xi=1.1))
    assert d.g == pytest.approx(0.125)
    assert d.Omega_eff == pytest.approx(0.875 + 2 * math.sqrt(0.1875), rel=1e-14)
    assert d.A == pytest.approx(8.99501120973957644, rel=1e-12)
    assert d.B == pytest.approx(9.84731022673676407, rel=1e-12)
    assert d.h == pytest.approx(0.54751131221719457, rel=1e-14)
    want_bk = [0.0012347185281495498, 0.012898057944190189, 0.044911693080637624, 0.05212826572023994]
    assert np.allclose(d.bk, want_bk, rtol=1e-12)
    # the mixture weights are A*b_k and sum to one
    assert np.allclose(d.weights, d.A * np.asarray(d.bk), rtol=1e-12)
    assert sum(d.weights) == pytest.approx(1.0, abs=1e-14)


def test_heterodyne_mu_is_mu1():
    assert malaga_derive(MODERATE).mu_r == MODERATE.mu1
    assert mean_fso_snr(MODERATE) == pytest.approx(MODERATE.mu1, rel=1e-12)


def test_pointing_limit():
    assert malaga_derive(MalagaParams(5.4, 4, xi=1e4)).h == pytest.approx(1.0, abs=1e-7)


def test_non_integer_beta_rejected_and_rounded():
    with pytest.raises(SpecError):
        MalagaParams(5.4, 3.8)
    with pytest.warns(UserWarning, match="rounded"):
        p = MalagaParams.rounded(5.4, 3.8)
    assert p.beta == 4 and p.beta_source == 3.8


# ---------------------------------------------------------------------------
# FSO hop
# ---------------------------------------------------------------------------


def test_cdf_fso_limits():
    assert cdf_fso(MODERATE, 0.0) == 0.0
    assert cdf_fso(MODERATE, 1e12 * MODERATE.mu1) == pytest.approx(1.0, abs=1e-6)
    assert cdf_fso(STRONG_IMDD, 1e12 * STRONG_IMDD.mu_r) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize(
    "x, analytic, mc",
    [(1.0, 0.27441128356163774, 0.2743929), (10.0, 0.5840017517964546, 0.58404), (100.0, 0.8876857467808851, 0.8876466)],
)
def test_cdf_fso_strong_imdd(x, analytic, mc):
    # mc: 10^7 generative samples, standard error below 1.6e-4
    v = cdf_fso(STRONG_IMDD, x)
    assert v == pytest.approx(analytic, rel=1e-8)
    assert abs(v - mc) < 3 * 1.6e-4


@pytest.mark.parametrize("alpha, beta", [(5.4, 4), (2.4, 2)])
def test_gamma_gamma_reduction(alpha, beta):
    # Gamma-Gamma with pointing errors coded directly as a Meijer G (mpmath)
    p = MalagaParams.gamma_gamma(alpha, beta, xi=1.1, r=1, mu1=10.0)
    xi2 = 1.21
    h = xi2 / (xi2 + 1)
    for x in (0.5, 5.0, 50.0):
        z = alpha * beta * h * x / p.mu1
        ref = xi2 / (mp.gamma(alpha) * mp.gamma(beta)) * mp.meijerg([[1], [xi2 + 1]], [[xi2, alpha, beta], [0]], z)
        assert cdf_fso(p, x) == pytest.approx(float(ref), rel=1e-9)


def test_pdf_fso_is_derivative():
    for x in (0.5, 3.0, 20.0):
        h = 1e-4 * x
        fd = (cdf_fso(MODERATE, x + h) - cdf_fso(MODERATE, x - h)) / (2 * h)
        assert pdf_fso(MODERATE, x) == pytest.approx(fd, rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(
    alpha=st.floats(1.5, 8.0),
    beta=st.integers(1, 5),
    xi=st.floats(0.7, 8.0),
    r=st.sampled_from([1, 2]),
    log_mu=st.floats(-1.0, 3.0),
)
def test_cdf_fso_monotone_bounded(alpha, beta, xi, r, log_mu):
    p = MalagaParams(alpha, beta, xi=xi, r=r, mu1=10.0**log_mu)
    xs = p.mu_r * np.logspace(-3, 3, 9)
    vals = [cdf_fso(p, x) for x in xs]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# RF hop
# ---------------------------------------------------------------------------


def test_cdf_sir_origin_and_symmetry():
    d = GenKParams(2.5, 3.5, 2, 1.0)
    assert cdf_sir(d, d, 0.0) == 0.0
    assert cdf_sir(d, d, 1.0) == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize(
    "kappa, kappa_i, x",
    [(1.09, 3.5, 1.0), (3.5, 3.5, 1.0), (1.09, 3.5, 0.01), (1.09, 3.5, 100.0), (75.5, 1.09, 3.0)],
)
def test_cdf_sir_against_beta_prime_integral(kappa, kappa_i, x):
    d, i = GenKParams(2.5, kappa, 2, 100.0), GenKParams(2.5, kappa_i, 2, 1.0)
    assert cdf_sir(d, i, x) == pytest.approx(sir_cdf_beta_prime(d, i, x), rel=1e-8)


def test_cdf_sir_heavy_shadowing_value():
    # 10^7-sample Monte-Carlo gave 0.0090259 +- 3.0e-5
    v = cdf_sir(GenKParams(2.5, 1.09, 2, 100.0), GenKParams(2.5, 3.5, 2, 1.0), 1.0)
    assert v == pytest.approx(0.009068703935009581, rel=1e-9)
    assert abs(v - 0.0090259) < 3 * 3.0e-5


def test_pdf_sir_normalisation_and_derivative():
    d, i = GenKParams(2.5, 1.09, 2, 1.0), GenKParams(2.5, 3.5, 2, 1.0)
    total, _ = integrate.quad(lambda u: pdf_sir(d, i, math.exp(u)) * math.exp(u), -40, 40, limit=200)
    assert total == pytest.approx(1.0, abs=1e-4)
    for x in (0.5, 1.0, 2.0):
        h = 1e-4
        fd = (cdf_sir(d, i, x + h) - cdf_sir(d, i, x - h)) / (2 * h)
        assert pdf_sir(d, i, x) == pytest.approx(fd, rel=1e-5)


def test_pdf_sir_mode_symmetric():
    # peak of a 10^7-sample histogram (400 log-bins on [-3, 3]): 0.358
    d = GenKParams(2.5, 3.5, 2, 1.0)
    xs = np.linspace(0.05, 3.0, 600)
    mode = xs[int(np.argmax([pdf_sir(d, d, x) for x in xs]))]
    assert mode == pytest.approx(0.358, rel=0.05)


def test_pdf_genk_values():
    p = GenKParams(2.5, 1.09, 2, 1.0)
    # 2 c^{(a+k)/2} x^{(a+k)/2-1} K_{a-k}(2 sqrt(c x)) / (Gamma(a) Gamma(k)), c = m k / P
    assert pdf_genk(p, 1.0) == pytest.approx(0.31218927073645874, rel=1e-9)
    total, _ = integrate.quad(lambda u: pdf_genk(p, math.exp(u)) * math.exp(u), -40, 10, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_pdf_genk_no_shadowing_limit():
    p = GenKParams(2.5, 1e4, 2, 1.0)
    for x in (0.5, 1.5, 3.0):
        gamma_pdf = 2.5**5 * x**4 * math.exp(-2.5 * x) / math.gamma(5)
        assert pdf_genk(p, x) == pytest.approx(gamma_pdf, rel=1e-3)


def test_cdf_genk_matches_pdf():
    p = GenKParams(1.5, 3.5, 1, 2.0)
    val, _ = integrate.quad(lambda u: pdf_genk(p, math.exp(u)) * math.exp(u), -40, math.log(1.7))
    assert cdf_genk(p, 1.7) == pytest.approx(val, rel=1e-7)


@settings(max_examples=15, deadline=None)
@given(m=st.floats(0.5, 4.0), kappa=st.floats(0.8, 80.0), N=st.integers(1, 3), L=st.integers(1, 3), gbar_db=st.floats(-10, 30))
def test_cdf_sir_monotone_bounded(m, kappa, N, L, gbar_db):
    d, i = GenKParams(m, kappa, N, 10 ** (gbar_db / 10)), GenKParams(2.5, 3.5, L, 1.0)
    xs = 10 ** (gbar_db / 10) * np.logspace(-3, 3, 9)
    vals = [cdf_sir(d, i, x) for x in xs]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# link budget
# ---------------------------------------------------------------------------


def test_path_loss():
    pl = PathLossParams(5.0, 10.71e-3, 2.5, 50.0)
    assert path_loss_db(pl) == pytest.approx(100.36780795052519, rel=1e-12)
    at_ref = PathLossParams(5.0, 10.71e-3, 2.5, 5.0)
    assert path_loss_db(at_ref) == pytest.approx(20 * math.log10(4 * math.pi * 5.0 / 10.71e-3))
    doubled = PathLossParams(5.0, 10.71e-3, 2.5, 100.0)
    assert path_loss_db(doubled) - path_loss_db(pl) == pytest.approx(10 * 2.5 * math.log10(2))
    assert 10 * math.log10(avg_power(pl, 1.0)) == pytest.approx(-path_loss_db(pl))


def test_kappa_from_sigma():
    assert kappa_from_sigma_db(3.5) == pytest.approx(1.09, abs=0.01)
    assert kappa_from_sigma_db(0.5) == pytest.approx(75.0, abs=0.1)
    assert kappa_from_sigma_db(1e-3) > 1e6
    with pytest.raises(SpecError):
        kappa_from_sigma_db(0.0)
