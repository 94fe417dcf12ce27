import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conspde import Grid, preset, sample_path
from conspde.coefficients import coefficients_from_spec
from conspde.flow import (
    cocycle_residual,
    contraction_report,
    coupled_ensemble,
    eta_confidence,
    initial_time_modulus,
    semiflow_residual,
)

from conftest import cosine


def test_equal_data_give_degenerate_zero_report(grid32, basis1, dk32):
    r0 = cosine(grid32)
    rep = contraction_report(r0, r0.copy(), dk32, sample_path(basis1, 1e-3, 0.1, 0), 0.1)
    assert rep.degenerate and rep.passed
    assert np.max(rep.distance) < 1e-12


def test_contraction_and_nonexpansivity_dean_kawasaki(grid32, basis1, dk32):
    a, b = cosine(grid32, 0.5), cosine(grid32, 0.5, phase=np.pi)
    paths = [sample_path(basis1, 1e-3, 0.3, s) for s in range(6)]
    for rep in coupled_ensemble(a, b, dk32, paths, 0.3):
        assert rep.passed and rep.max_ratio <= 1 + 5e-3
        assert rep.max_increase <= 1 + 5e-3
        assert np.all(rep.distance >= 0)


def test_contraction_sine_gordon_bound_uses_exp_t(grid32, basis1):
    cs = preset("sine_gordon", kappa=1.0, epsilon=0.01)
    rep = contraction_report(cosine(grid32, 0.5), cosine(grid32, 0.3, k=2), cs,
                             sample_path(basis1, 1e-3, 0.5, 1), 0.5, save_every=0.01)
    assert np.allclose(rep.bound, np.exp(rep.times) * rep.distance[0])
    assert rep.passed


def test_contraction_heat_with_dean_kawasaki_noise():
    g = Grid(1, 128)
    from conspde import build_basis

    basis = build_basis(1, 4)
    cs = coefficients_from_spec({"phi": "identity", "sigma": {"kind": "sqrt_reg", "delta": 0.25}, "epsilon": 0.01})
    paths = [sample_path(basis, 1e-4, 0.05, s) for s in range(4)]
    for rep in coupled_ensemble(cosine(g), cosine(g, 0.5, phase=np.pi), cs, paths, 0.05, save_every=1e-3):
        assert rep.max_ratio <= 1 + 5e-3 and rep.violations == 0


def test_semiflow_trivial_and_generic(grid32, basis1, dk32):
    r0 = cosine(grid32)
    p = sample_path(basis1, 1e-3, 0.5, 7)
    assert semiflow_residual(r0, 0.1, 0.1, 0.4, dk32, p) == 0.0
    assert semiflow_residual(r0, 0.1, 0.4, 0.4, dk32, p) == 0.0
    assert semiflow_residual(r0, 0.05, 0.237, 0.5, dk32, p) < 1e-12
    with pytest.raises(ValueError):
        semiflow_residual(r0, 0.2, 0.1, 0.4, dk32, p)
    with pytest.raises(ValueError):
        semiflow_residual(r0, 0.0, 0.1005, 0.4, dk32, p)


def test_cocycle_trivial_and_generic(grid32, basis1, dk32):
    r0 = cosine(grid32)
    p = sample_path(basis1, 1e-3, 1.0, 5)
    assert cocycle_residual(r0, 0.0, 0.3, dk32, p) == 0.0
    assert cocycle_residual(r0, 0.3, 0.0, dk32, p) == 0.0
    assert cocycle_residual(r0, 0.25, 0.5, dk32, p) < 1e-12
    with pytest.raises(ValueError):
        cocycle_residual(r0, 0.2505, 0.5, dk32, p)


@given(st.integers(0, 300), st.integers(0, 300), st.integers(0, 2**40))
def test_cocycle_random_configurations(s_steps, t_steps, seed):
    g = Grid(1, 16)
    from conspde import build_basis, eval_constants

    basis = build_basis(1, 2)
    cs = preset("dean_kawasaki", epsilon=0.05, F1=eval_constants(basis, g).F1)
    p = sample_path(basis, 1e-3, 0.6, seed)
    assert cocycle_residual(cosine(g), s_steps * 1e-3, t_steps * 1e-3, cs, p) < 1e-12


def test_heat_modulus_is_lipschitz():
    g = Grid(1, 64)
    fit = initial_time_modulus(cosine(g), [0.0, 0.001, 0.002, 0.004, 0.006], 0.05, preset("heat"), None, dt=1e-4)
    assert fit.eta_fit == pytest.approx(1.0, abs=0.1)


def test_duplicate_initial_times_excluded(grid32):
    fit = initial_time_modulus(cosine(grid32), [0.0, 0.01, 0.01, 0.03], 0.05, preset("heat"), None, dt=1e-3)
    dup = [d for s1, s2, d in fit.pairs if s1 == s2]
    assert dup == [0.0]
    assert np.isfinite(fit.eta_fit)


def test_modulus_needs_three_points(grid32):
    with pytest.raises(ValueError):
        initial_time_modulus(cosine(grid32), [0.0, 0.01], 0.05, preset("heat"), None, dt=1e-3)


def test_eta_confidence_summary():
    from conspde.flow import ModulusFit

    fits = [ModulusFit(e, 1.0) for e in (0.4, 0.5, 0.6, float("nan"))]
    out = eta_confidence(fits, 200)
    assert out["n_paths"] == 3 and out["eta_mean"] == pytest.approx(0.5)
    assert out["ci_low"] <= 0.5 <= out["ci_high"]
