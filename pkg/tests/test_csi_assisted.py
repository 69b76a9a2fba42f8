import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from foxlink import channels, mc_sim
from foxlink import csi_assisted as ca
from foxlink.errors import DegeneracyError, SpecError
from foxlink.params import CsiAssisted, FixedGain, GenKParams, MalagaParams, ModulationScheme, RelaySystem

BPSK = ModulationScheme.builtin("bpsk")


def system(fso, kappa=1.09, N=2, m=2.5, L=1, kappa_i=3.5, gbar=100.0):
    return RelaySystem(fso, GenKParams(m, kappa, N, gbar), GenKParams(2.5, kappa_i, L, 1.0), CsiAssisted())


HETERODYNE = system(MalagaParams(5.4, 4, xi=1.1, r=1, mu1=30.0))
IMDD = system(MalagaParams(5.4, 4, xi=1.1, r=2, mu1=30.0))


@pytest.mark.parametrize(
    "gth, want", [(0.3, 0.00661461095235405), (3.0, 0.08770824179723236), (30.0, 0.6895116692355032)]
)
def test_outage_bound_reference(gth, want):
    res = ca.outage_bound(HETERODYNE, gth)
    assert res.value == pytest.approx(want, rel=1e-8)
    # product of the two hop survival functions, evaluated independently
    f1 = channels.cdf_fso(HETERODYNE.fso, gth)
    f2 = channels.cdf_sir(HETERODYNE.rf, HETERODYNE.interf, gth)
    assert res.value == pytest.approx(f1 + f2 - f1 * f2, rel=1e-12)
    # the bivariate route agreed, otherwise a ConsistencyError would have been raised
    assert res.diagnostics["route_gap"] < 1e-6


@pytest.mark.parametrize("sys", [HETERODYNE, IMDD], ids=["heterodyne", "imdd"])
def test_bound_below_simulated_outage(sys):
    for gth in (0.3, 3.0, 30.0):
        est = mc_sim.simulate_outage(sys, gth, mc_sim.SimConfig(200_000, seed=2))
        assert ca.outage_bound(sys, gth, cross_check=False).value <= est.mean + 3 * est.stdError


def test_rejects_fixed_gain_system():
    fixed = RelaySystem(HETERODYNE.fso, HETERODYNE.rf, HETERODYNE.interf, FixedGain(1.0))
    with pytest.raises(SpecError):
        ca.outage_bound(fixed, 1.0)
    with pytest.raises(SpecError):
        ca.capacity_csi(fixed)


@settings(max_examples=10, deadline=None)
@given(log_mu=st.floats(0.0, 4.0), log_g=st.floats(0.0, 4.0), kappa=st.floats(1.0, 20.0), L=st.integers(1, 3))
def test_bound_monotone_in_threshold(log_mu, log_g, kappa, L):
    sys = system(MalagaParams(2.4, 2, xi=1.1, r=1, mu1=10**log_mu), kappa=kappa, L=L, gbar=10**log_g)
    vals = [ca.outage_bound(sys, g, cross_check=False).value for g in np.logspace(-2, 3, 6)]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# asymptotics
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "fso, order",
    [
        (MalagaParams(5.4, 4, xi=1.1, r=1), 1.0),
        (MalagaParams(5.4, 4, xi=1.1, r=2), 0.5),
        (MalagaParams.gamma_gamma(2.4, 2, xi=7.1, r=1), 1.09),
    ],
)
def test_asymptote_and_diversity_order(fso, order):
    sys = system(fso).with_mu_r(1e6).with_sir_mean(1e6)
    exact = ca.outage_bound(sys, 1.0).value
    approx, terms = ca.outage_asymptotic_csi(sys, 1.0)
    assert exact / approx.value == pytest.approx(1.0, abs=1e-3)
    assert terms.diversity_order == pytest.approx(order)
    assert approx.diagnostics["valid"]


def test_zeta_coefficients_match_leading_terms():
    # each family's leading coefficient is zeta_j / psi_j
    sys = system(MalagaParams.gamma_gamma(5.4, 4, xi=1.1, r=1))
    _, at = ca.outage_asymptotic_csi(sys, 1.0)
    for p, z, label in zip(at.psi, at.zeta, at.labels):
        coefs = [t["coef"] for t in at.terms if t["branch"] == label and t["exponent"] == p]
        assert z == pytest.approx(p * sum(coefs), rel=1e-12)


def test_slope_of_bound():
    sys = system(MalagaParams.gamma_gamma(5.4, 4, xi=1.1, r=2), kappa=75.5)
    lo = ca.outage_bound(sys.with_mu_r(1e5).with_sir_mean(1e5), 1.0, cross_check=False).value
    hi = ca.outage_bound(sys.with_mu_r(1e7).with_sir_mean(1e7), 1.0, cross_check=False).value
    assert -math.log10(hi / lo) / 2 == pytest.approx(0.605, rel=0.02)


def test_tied_rf_exponents_raise():
    sys = system(MalagaParams(5.4, 4, xi=1.1, r=1), kappa=5.0)
    with pytest.raises(DegeneracyError):
        ca.outage_asymptotic_csi(sys, 1.0)


# ---------------------------------------------------------------------------
# error rate
# ---------------------------------------------------------------------------


def test_ber_routes_agree():
    closed = ca.avg_ber_csi(HETERODYNE, BPSK).value
    assert closed == pytest.approx(0.006491696544351666, rel=1e-8)
    assert ca.avg_ber_csi_via_cdf(HETERODYNE, BPSK) == pytest.approx(closed, rel=1e-6)


def test_ber_bound_below_simulated_ber():
    est = mc_sim.simulate_ber(HETERODYNE, BPSK, mc_sim.SimConfig(400_000, seed=8))
    assert ca.avg_ber_csi(HETERODYNE, BPSK).value <= est.mean + 3 * est.stdError


# ---------------------------------------------------------------------------
# capacity
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
def test_cmgf_fso_against_quadrature(s):
    def f(u):
        x = math.exp(u)
        return x * math.exp(-s * x) * (1 - channels.cdf_fso(HETERODYNE.fso, x))

    ref = integrate.quad(f, -30, 8, limit=200, epsrel=1e-11)[0]
    assert ca.cmgf_fso(HETERODYNE, s).value == pytest.approx(ref, rel=1e-9)


def test_cmgf_sir_against_quadrature():
    s = 0.5

    def f(u):
        x = math.exp(u)
        return x * math.exp(-s * x) * (1 - channels.cdf_sir(HETERODYNE.rf, HETERODYNE.interf, x))

    ref = integrate.quad(f, -30, 8, limit=200, epsrel=1e-11)[0]
    assert ca.cmgf_sir(HETERODYNE, s).value == pytest.approx(ref, rel=1e-8)


def test_capacity_routes_and_mc():
    c = ca.capacity_csi(HETERODYNE).value
    assert c == pytest.approx(1.9430862200840187, rel=1e-8)
    assert ca.capacity_via_cmgf(HETERODYNE).value == pytest.approx(c, rel=1e-7)
    est = mc_sim.simulate_capacity(HETERODYNE, mc_sim.SimConfig(400_000, seed=4))
    assert est.covers(c, k=3)


def test_capacity_exact_for_imdd():
    c = ca.capacity_csi(IMDD).value
    assert c == pytest.approx(1.17413295854638, rel=1e-8)
    est = mc_sim.simulate_capacity(IMDD, mc_sim.SimConfig(400_000, seed=4))
    assert est.covers(c, k=3)


def test_capacity_nakagami_limit():
    sys = system(MalagaParams(5.4, 4, xi=1.1, r=1, mu1=30.0), kappa=1e4, kappa_i=1e4)
    assert ca.capacity_csi(sys).value == pytest.approx(ca.capacity_csi_nakagami(sys).value, rel=1e-3)


def test_capacity_grows_with_snr():
    caps = [ca.capacity_csi(HETERODYNE.with_mu_r(mu).with_sir_mean(mu)).value for mu in (1.0, 10.0, 100.0, 1000.0)]
    assert all(b > a for a, b in zip(caps, caps[1:]))


def test_asymptote_with_integer_rf_exponent():
    # light shadowing makes N m = 5 the RF exponent; it meets the integer poles of the CCDF kernel
    sys = system(MalagaParams.gamma_gamma(5.4, 4, xi=7.1, r=1), kappa=75.5).with_mu_r(1e6).with_sir_mean(1e6)
    approx, terms = ca.outage_asymptotic_csi(sys, 1.0)
    assert terms.psi[0] == 5.0 and terms.zeta[0] != 0.0
    assert ca.outage_bound(sys, 1.0).value / approx.value == pytest.approx(1.0, abs=1e-3)
