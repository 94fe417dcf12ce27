import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from conspde.coefficients import (
    CoefficientSet,
    ScalarFunction,
    coefficients_from_spec,
    identity_function,
    invert_monotone,
    preset,
    sqrt_reg_function,
    strat_to_ito,
    theta_phi,
    verify_assumptions,
    zero_function,
)


def test_heat_report_all_satisfied():
    rep = verify_assumptions(preset("heat"), F1=18.0)
    assert rep.satisfied
    assert rep.coercivity_constant == 1.0


def test_identity_phi_zero_sigma_coercivity_is_one():
    cs = coefficients_from_spec({"phi": "identity", "sigma": "zero", "epsilon": 1.0})
    assert verify_assumptions(cs, F1=123.0).coercivity_constant == 1.0


def test_linear_sigma_breaks_coercivity():
    # Phi' - (F1/2) sigma'^2 = 1 - 2 with unit noise intensity
    cs = coefficients_from_spec({"phi": "identity", "sigma": "identity", "epsilon": 1.0})
    rep = verify_assumptions(cs, F1=4.0)
    assert not rep.satisfied
    g1 = rep.entry("stochastic coercivity")
    assert g1.status == "violated"
    assert rep.coercivity_constant == pytest.approx(-1.0)


@pytest.mark.parametrize("eps", [0.01, 0.1, 1.0])
def test_dean_kawasaki_coercivity_at_least_one(eps):
    F1 = 18.0
    cs = preset("dean_kawasaki", epsilon=eps, F1=F1)
    rep = verify_assumptions(cs, F1)
    xi = np.geomspace(1e-6, 1e2, 801)
    oracle = np.min(cs.phi.d1(xi) - 0.5 * eps * F1 * cs.sigma.d1(xi) ** 2)
    assert rep.coercivity_constant >= 1.0 - 1e-12
    assert oracle == pytest.approx(1.0, abs=1e-12)
    assert rep.satisfied


def test_dean_kawasaki_small_floor_limsup_bounded():
    cs = preset("dean_kawasaki", epsilon=0.01, F1=18.0, delta_reg=1e-3)
    rep = verify_assumptions(cs, 18.0)
    e = rep.entry("limsup sigma^2/xi")
    assert e.satisfied
    xi = np.geomspace(1e-8, 1.0, 2001)
    assert np.max(cs.sigma(xi) ** 2 / xi) < 1.0 + 1e-9


def test_sine_gordon_f_lip():
    assert preset("sine_gordon", kappa=1.0).f_lip == 1.0
    assert preset("sine_gordon", kappa=-3.0).f_lip == 3.0


def test_unknown_preset_and_bad_epsilon():
    with pytest.raises(ValueError):
        preset("porous")
    with pytest.raises(ValueError):
        preset("heat", epsilon=1.5)
    with pytest.raises(ValueError):
        preset("dean_kawasaki", epsilon=0.1)


def test_theta_alternatives_both_reported():
    rep = verify_assumptions(preset("heat"), 1.0)
    e = rep.entry("Theta alternatives")
    assert e.satisfied and "first alternative" in e.detail
    assert rep.theta_alternative == e.detail


def test_unverifiable_entry_for_nonfinite():
    bad = ScalarFunction(lambda x: np.where(np.asarray(x) > 10, np.inf, x), lambda x: np.ones_like(x),
                         lambda x: np.zeros_like(x), "custom")
    cs = CoefficientSet("bad", bad, zero_function(), zero_function())
    rep = verify_assumptions(cs, 1.0)
    e = rep.entry("Phi growth")
    assert e.status == "unverifiable" and e.worst_point > 10


def test_requires_dense_lattice():
    with pytest.raises(ValueError):
        verify_assumptions(preset("heat"), 1.0, n_samples=50)


@given(st.floats(1e-6, 1e-2), st.floats(1.0, 1e2), st.floats(1e-3, 0.1), st.floats(1.5, 10.0))
def test_margins_monotone_in_range(lo, hi, shrink_lo, grow_hi):
    cs = preset("dean_kawasaki", epsilon=0.1, F1=18.0)
    small = verify_assumptions(cs, 18.0, (lo, hi))
    big = verify_assumptions(cs, 18.0, (lo * shrink_lo, hi * grow_hi))
    for e in small.entries:
        if e.name == "Theta alternatives":
            continue
        assert big.entry(e.name).margin <= e.margin + 1e-12, e.name


def test_strat_to_ito_linear_sigma():
    corr = strat_to_ito(lambda x: np.ones_like(x), epsilon=0.1, F1=2.0)
    assert float(corr.phi(np.array([1.0]))[0]) == pytest.approx(1.1, rel=1e-12)
    assert float(corr.g(np.array([0.0]))[0]) == 0.0


def test_strat_to_ito_constant_sigma_is_identity():
    corr = strat_to_ito(lambda x: np.zeros_like(x), epsilon=0.5, F1=10.0)
    x = np.linspace(0, 50, 11)
    assert np.array_equal(corr.g(x), np.zeros_like(x))
    assert np.array_equal(corr.phi(x), x)


def test_strat_to_ito_sqrt_reg_matches_quadrature():
    sig = sqrt_reg_function(1e-2, 8.0)
    corr = strat_to_ito(sig.d1, epsilon=0.01, F1=18.0, scale=1e-2)
    for x in (1e-4, 1e-2, 0.3, 1.0, 7.0, 40.0):
        ref = quad(lambda s: sig.d1(s) ** 2, 0.0, x, points=[1e-4, 1e-2], epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        assert abs(float(corr.g(np.array([x]))[0]) - ref) < 1e-8
    assert corr.error_estimate < 1e-8


@given(st.floats(1e-3, 50.0))
def test_strat_to_ito_derivative_is_sigma_prime_squared(x):
    sig = sqrt_reg_function(1e-2, 8.0)
    corr = strat_to_ito(sig.d1, epsilon=0.01, F1=18.0, scale=1e-2)
    h = 1e-4 * x
    cd = (corr.g(np.array([x + h]))[0] - corr.g(np.array([x - h]))[0]) / (2 * h)
    assert cd == pytest.approx(float(sig.d1(x)) ** 2, rel=1e-4)


@given(st.floats(0.0, 1.0), st.floats(0.0, 20.0), st.floats(1e-2, 1.0))
def test_dean_kawasaki_passes_documented_range(eps, F1, delta):
    cs = preset("dean_kawasaki", epsilon=eps, F1=F1, delta_reg=delta)
    assert verify_assumptions(cs, F1).satisfied


@given(st.floats(0.0, 1.0), st.floats(0.0, 20.0), st.floats(0.0, 5.0))
def test_sine_gordon_passes_documented_range(eps, F1, kappa):
    delta = 0.25
    if eps * F1 >= 8 * delta**2:
        return
    cs = preset("sine_gordon", epsilon=eps, kappa=kappa)
    assert verify_assumptions(cs, F1).satisfied


def test_theta_phi_closed_form():
    xi = np.array([0.5, 1.0, 4.0])
    # Phi' = 1 + 3 x^2 with p = 2: Theta' = sqrt(1 + 3 x^2)
    ref = [quad(lambda s: np.sqrt(1 + 3 * s * s), 0, x)[0] for x in xi]
    assert np.allclose(theta_phi(lambda s: 1 + 3 * s * s, xi), ref, rtol=1e-12)


def test_invert_monotone_cubic():
    cs = coefficients_from_spec({"phi": {"kind": "cubic", "a": 1.0}})
    r = np.array([0.0, 0.1, 1.0, 3.0, -2.0])
    assert np.allclose(cs.invert_phi(r + r**3), r, atol=1e-12)
    assert np.allclose(invert_monotone(identity_function(), np.array([2.5])), 2.5)


def test_convolution_drift_lipschitz():
    cs = coefficients_from_spec({"B": {"kind": "convolution", "strength": 0.5}})
    assert cs.B_lip == pytest.approx(0.5 * (1 + 2 * np.pi))
    assert cs.contraction_rate() == cs.B_lip


def test_with_epsilon_rebuilds():
    cs = preset("dean_kawasaki", epsilon=0.1, F1=18.0)
    c0 = cs.with_epsilon(0.0)
    assert c0.noiseless and c0.phi.kind == "identity"
