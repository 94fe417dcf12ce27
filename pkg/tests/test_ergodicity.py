import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from conspde import Grid, build_basis, eval_constants, preset
from conspde import ergodicity as erg
from conspde.ergodicity import EmpiricalMeasure, kr_distance, kr_distance_info

from conftest import cosine


def lp_w1(x, y, wx=None, wy=None):
    """Optimal transport cost between two discrete measures on the line by linear programming."""
    n, m = len(x), len(y)
    wx = np.full(n, 1 / n) if wx is None else wx
    wy = np.full(m, 1 / m) if wy is None else wy
    cost = np.abs(np.subtract.outer(x, y)).ravel()
    A = np.vstack([np.kron(np.eye(n), np.ones(m)), np.kron(np.ones(n), np.eye(m))])
    return linprog(cost, A_eq=A, b_eq=np.concatenate([wx, wy]), bounds=(0, None), method="highs").fun


def m1(v, w=None):
    return EmpiricalMeasure("t", np.asarray(v, float)[:, None], w)


def test_kr_trivial_cases():
    a = m1([0.3, 0.1, 2.0])
    assert kr_distance(a, a) == 0.0
    assert kr_distance(m1([1.5]), m1([-0.25])) == pytest.approx(1.75)
    # each atom of {0, 1} travels 0.5 to reach {0.5, 0.5}
    assert kr_distance(m1([0.0, 1.0]), m1([0.5, 0.5])) == pytest.approx(0.5, abs=1e-15)
    assert lp_w1(np.array([0.0, 1.0]), np.array([0.5, 0.5])) == pytest.approx(0.5, abs=1e-12)


def test_kr_matches_linear_program_weighted():
    rng = np.random.default_rng(3)
    for _ in range(10):
        x, y = rng.normal(size=5), rng.normal(size=7)
        wx, wy = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(7))
        assert kr_distance(m1(x, wx), m1(y, wy)) == pytest.approx(lp_w1(x, y, wx, wy), abs=1e-9)


def test_kr_equals_quantile_integral():
    rng = np.random.default_rng(4)
    x, y = rng.normal(size=50), rng.exponential(size=50)
    ref = np.mean(np.abs(np.sort(x) - np.sort(y)))
    assert kr_distance(m1(x), m1(y)) == pytest.approx(ref, abs=1e-12)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6), st.lists(st.floats(-5, 5), min_size=1, max_size=6),
       st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_kr_pseudometric(a, b, c):
    A, B, C = m1(a), m1(b), m1(c)
    assert kr_distance(A, B) == pytest.approx(kr_distance(B, A), abs=1e-12)
    assert kr_distance(A, C) <= kr_distance(A, B) + kr_distance(B, C) + 1e-12
    assert kr_distance(A, A) == 0.0


def test_kr_multivariate_is_labelled_lower_bound():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(6, 3)), rng.normal(size=(6, 3)) + 0.5
    info = kr_distance_info(EmpiricalMeasure("m", x), EmpiricalMeasure("m", y))
    assert info["kind"] == "lower_bound"
    cost = np.linalg.norm(x[:, None] - y[None], axis=2).ravel()
    A = np.vstack([np.kron(np.eye(6), np.ones(6)), np.kron(np.ones(6), np.eye(6))])
    exact = linprog(cost, A_eq=A, b_eq=np.full(12, 1 / 6), bounds=(0, None), method="highs").fun
    assert info["value"] <= exact + 1e-12


def test_kr_dimension_mismatch():
    with pytest.raises(ValueError):
        kr_distance(EmpiricalMeasure("m", np.ones((3, 2))), EmpiricalMeasure("m", np.ones((3, 1))))


def test_empirical_measure_weights_validated():
    with pytest.raises(ValueError):
        EmpiricalMeasure("m", np.ones(3), np.array([0.5, 0.5, 0.5]))


def test_features_registry(grid32):
    r = cosine(grid32)
    assert erg.features(r, grid32, "mass")[0] == pytest.approx(1.0)
    assert erg.features(r, grid32, "var")[0] == pytest.approx(0.125, rel=1e-12)
    with pytest.raises(ValueError):
        erg.features(r, grid32, "nope")


def test_dissipation_heat_uniform_is_zero():
    g = Grid(1, 32)
    rep = erg.dissipation_check(preset("heat"), np.ones(32), 0.1, 1, dt=1e-3)
    # displayed Psi1 carries the +1/e shift that makes it nonnegative
    assert np.allclose(rep.psi1_mean - 1 / math.e, 0.0, atol=1e-15)
    assert np.all(rep.psi2_integral_mean == 0.0)


def test_dissipation_heat_entropy_nonincreasing(grid32):
    rep = erg.dissipation_check(preset("heat"), cosine(grid32, 0.8), 0.2, 1, dt=1e-3)
    assert np.all(np.diff(rep.psi1_mean) <= 1e-15)
    assert np.all(rep.psi1_mean >= 0)


def test_dissipation_sweep_reports_thresholds(grid32, dk32):
    sw = erg.dissipation_sweep(dk32, cosine(grid32), [0.1, 0.2], 4, dt=1e-3)
    assert sw["threshold_two_point"] == 2 * sw["threshold_one_point"]
    assert len(sw["C_fit"]) == 2 and sw["stability_ratio"] >= 1.0


def test_two_point_identical_data(grid32, dk32):
    st_ = erg.two_point_run(cosine(grid32), cosine(grid32), dk32, [0.05, 0.1], 0.05, 10, dt=1e-3)
    assert np.all(st_.estimates == 0.0)


def test_two_point_pathwise_nested(grid32, dk32):
    a, b = cosine(grid32, 0.5), cosine(grid32, 0.5, phase=np.pi)
    st_ = erg.two_point_run(a, b, dk32, [0.01, 0.02, 0.04, 0.08], 0.05, 30, seed0=2, dt=1e-3)
    assert np.all(np.diff(st_.counts) <= 0)
    assert np.all((0 <= st_.estimates) & (st_.estimates <= 1))


def test_mixing_fit_recovers_alpha():
    fit = erg.mixing_fit(erg.synthetic_two_point(0.3, [2, 4, 8, 16, 32, 64]), n_boot=0)
    assert fit["alpha_hat"] == pytest.approx(0.3, abs=0.02)
    noisy = erg.mixing_fit(erg.synthetic_two_point(0.3, [2, 4, 8, 16, 32, 64], n_paths=20000, seed=1), 300)
    lo, hi = noisy["alpha_ci"]
    assert lo < 0.3 < hi


def test_mixing_fit_flat_and_degenerate():
    flat = erg.two_point_stats_from_counts([2, 4, 8, 16], [50, 50, 50, 50], 100, 0.05)
    assert erg.mixing_fit(flat, n_boot=0)["alpha_hat"] == pytest.approx(0.0, abs=1e-12)
    zero = erg.two_point_stats_from_counts([2, 4, 8, 16], [0, 0, 0, 0], 100, 0.05)
    assert erg.mixing_fit(zero)["status"] == "fully mixed before first horizon"
    with pytest.raises(ValueError):
        erg.mixing_fit(erg.two_point_stats_from_counts([2, 4], [5, 3], 10, 0.05))


def test_heat_contractivity_rate():
    g = Grid(1, 256)
    x = g.centers_1d
    fam = [1 + 0.5 * np.cos(2 * np.pi * x), 1 + 0.5 * np.sin(2 * np.pi * x)]
    prof = erg.contractivity_profile(preset("heat"), fam, 0.2, dt=1e-4, save_every=1e-3)
    assert prof["decay_rate"] == pytest.approx(4 * np.pi**2, rel=0.1)
    assert prof["contractive"]
    same = erg.contractivity_profile(preset("heat"), [fam[0], fam[0]], 0.01, dt=1e-3)
    assert max(same["C_R"]) == 0.0


def test_sine_gordon_bistable_not_contractive():
    g = Grid(1, 32)
    x = g.centers_1d
    fam = [0.4 + 0.2 * np.cos(2 * np.pi * x), 2 * np.pi + 0.5 * np.cos(2 * np.pi * x)]
    prof = erg.contractivity_profile(preset("sine_gordon", kappa=20.0), fam, 1.0, dt=1e-3, save_every=0.01)
    assert not prof["contractive"]
    assert prof["C_R"][-1] == pytest.approx(2 * np.pi, rel=1e-6)


def test_deterministic_flow_requires_zero_noise(grid32, dk32):
    with pytest.raises(ValueError):
        erg.deterministic_flow(cosine(grid32), 0.1, dk32)
    tr = erg.deterministic_flow(cosine(grid32), 0.1, dk32.with_epsilon(0.0), dt=1e-3)
    assert tr.final.shape == (32,)


def test_default_family_equal_mass(grid32):
    fam = erg.default_family(grid32, mass=2.0)
    assert all(abs(float(grid32.integrate(f)) - 2.0) < 1e-12 for f in fam)


def test_support_proximity_noiseless_and_huge_delta(grid32, basis1, dk32):
    r0 = cosine(grid32)
    out = erg.support_proximity(r0, dk32.with_epsilon(0.0), 0.1, 1e-6, 5, dt=1e-3)
    assert out["probability"] == 1.0
    big = erg.support_proximity(r0, dk32, 0.2, 2 * 0.2 * 2.0, 8, dt=1e-3)
    assert big["probability"] == 1.0


def test_support_proximity_nondecreasing_as_noise_vanishes(grid32):
    basis = build_basis(1, 4)
    F1 = eval_constants(basis, grid32).F1
    r0 = cosine(grid32)
    probs = []
    for eps in (0.1, 0.01, 0.001):
        cs = preset("dean_kawasaki", epsilon=eps, F1=F1)
        probs.append(erg.support_proximity(r0, cs, 0.2, 0.08, 40, seed0=1, noise=basis, dt=1e-3)["probability"])
    assert probs[0] <= probs[1] <= probs[2]
    assert probs[2] > probs[0]


def test_occupation_heat_concentrates_at_uniform(grid32):
    mu = erg.occupation_measure(cosine(grid32), preset("heat"), 5.0, 1.0, 0.05, "var", dt=1e-3)
    point = EmpiricalMeasure("var", np.zeros((1, 1)))
    assert kr_distance(mu, point) < 1e-3


def test_occupation_single_sample(grid32, dk32):
    mu = erg.occupation_measure(cosine(grid32), dk32, 0.15, 0.1, 0.05, "var", dt=1e-3)
    assert len(mu) == 1
    with pytest.raises(ValueError):
        erg.occupation_measure(cosine(grid32), dk32, 0.1, 0.1, 0.05, "var", dt=1e-3)


def test_occupation_mass_sector(grid32, dk32):
    mu = erg.occupation_measure(cosine(grid32), dk32, 0.5, 0.1, 0.05, "mass", seeds=(0, 1), dt=1e-3)
    assert np.max(np.abs(mu.samples - 1.0)) < 1e-12


def test_chapman_kolmogorov_noiseless_and_s0(grid32, dk32):
    r0 = cosine(grid32)
    det = erg.chapman_kolmogorov_check(r0, dk32.with_epsilon(0.0), 0.05, 0.1, 20, dt=1e-3, n_boot=50)
    assert det["distance"] == 0.0 and det["within"]
    s0 = erg.chapman_kolmogorov_check(r0, dk32, 0.0, 0.1, 60, "var", seed0=4, dt=1e-3, n_boot=200)
    assert s0["kind"] == "exact"
    assert s0["distance"] <= 2 * s0["band"]
