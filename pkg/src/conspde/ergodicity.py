"""Coupling experiments for long-time behaviour.

States are projected to finite feature vectors before any distance between
laws is computed, so every Kantorovich-Rubinstein distance reported here is a
lower bound for the distance between the laws of the full states.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSet
from .flow import coupled_ensemble
from .grid import Grid
from .noise import NoiseBasis, build_basis, derive_seed, sample_path, steps_of
from .solver import Trajectory, _flat_sum, _grad_sq, default_dt, grid_of, solve, solve_ensemble
from .stats import bootstrap_ci, loglog_fit, wilson_interval

DEFAULT_DELTA = 0.05
N_BOOT = 1000


# ---------------------------------------------------------------------------
# feature maps


def _mass(rho, grid):
    return grid.integrate(rho)[..., None]


def _var(rho, grid):
    m = grid.integrate(rho)
    m = m.reshape(m.shape + (1,) * grid.dim)
    return grid.integrate((rho - m) ** 2)[..., None]


def _fourier1(rho, grid):
    out = []
    for a in range(grid.dim):
        x = grid.centers[a]
        c = grid.integrate(rho * np.cos(2 * np.pi * x))
        s = grid.integrate(rho * np.sin(2 * np.pi * x))
        out.append(np.hypot(c, s))
    return np.stack(out, axis=-1)


def _moments(rho, grid):
    return np.stack([grid.integrate(rho), grid.integrate(rho * rho)], axis=-1)


def _coarse(rho, grid, blocks: int = 4):
    if grid.dim == 1:
        parts = rho.reshape(rho.shape[:-1] + (blocks, -1))
        return parts.mean(axis=-1)
    b = 2
    n = grid.n
    parts = rho.reshape(rho.shape[:-2] + (b, n // b, b, n // b))
    return parts.mean(axis=(-3, -1)).reshape(rho.shape[:-2] + (b * b,))


FEATURES = {
    "mass": _mass,
    "var": _var,
    "fourier1": _fourier1,
    "moments": _moments,
    "coarse": _coarse,
}


def features(rho: np.ndarray, grid: Grid, feature_map: str) -> np.ndarray:
    """Feature vectors of a (possibly batched) state array, shape ``(..., q)``."""
    if feature_map not in FEATURES:
        raise ValueError(f"unknown feature map {feature_map!r}; choose from {sorted(FEATURES)}")
    return FEATURES[feature_map](rho, grid)


@dataclass
class EmpiricalMeasure:
    feature_map: str
    samples: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        n = self.samples.shape[0]
        if n == 0:
            raise ValueError("empirical measure needs at least one sample")
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (n,) or np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=1e-12):
                raise ValueError("weights must be nonnegative, one per sample, summing to 1")
            self.weights = w

    @property
    def q(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    def resample(self, rng: np.random.Generator) -> "EmpiricalMeasure":
        idx = rng.choice(len(self), size=len(self), replace=True, p=self.weights)
        return EmpiricalMeasure(self.feature_map, self.samples[idx])


def _w1_line(x, wx, y, wy) -> float:
    """Exact 1-Wasserstein distance between weighted point sets on the line."""
    values = np.concatenate([x, y])
    order = np.argsort(values, kind="mergesort")
    v = values[order]
    w = np.concatenate([wx, -wy])[order]
    cdf_diff = np.cumsum(w)[:-1]
    return float(np.sum(np.abs(cdf_diff) * np.diff(v)))


def _directions(q: int, n_random: int = 64) -> np.ndarray:
    dirs = [np.eye(q)]
    if q > 1:
        rng = np.random.default_rng(12345 + q)
        r = rng.standard_normal((n_random, q))
        dirs.append(r / np.linalg.norm(r, axis=1, keepdims=True))
    return np.concatenate(dirs, axis=0)


def kr_distance_info(mu1: EmpiricalMeasure, mu2: EmpiricalMeasure) -> dict:
    """KR distance with a label: ``exact`` for ``q = 1``, ``lower_bound`` otherwise.

    For ``q > 1`` the value is the largest one-dimensional distance between the
    projections onto a fixed set of unit vectors; each projection is a
    1-Lipschitz functional, so this never exceeds the true distance.
    """
    if mu1.q != mu2.q:
        raise ValueError(f"dimension mismatch: {mu1.q} vs {mu2.q}")
    if mu1.feature_map != mu2.feature_map:
        raise ValueError("measures use different feature maps")
    if mu1.q == 1:
        return {"value": _w1_line(mu1.samples[:, 0], mu1.weights, mu2.samples[:, 0], mu2.weights), "kind": "exact"}
    best = 0.0
    for u in _directions(mu1.q):
        best = max(best, _w1_line(mu1.samples @ u, mu1.weights, mu2.samples @ u, mu2.weights))
    return {"value": best, "kind": "lower_bound"}


def kr_distance(mu1: EmpiricalMeasure, mu2: EmpiricalMeasure) -> float:
    return kr_distance_info(mu1, mu2)["value"]


# ---------------------------------------------------------------------------
# shared set-up


def _setup(grid: Grid, cs: CoefficientSet, noise: NoiseBasis | None, dt: float | None):
    basis = None if cs.noiseless else (noise or build_basis(grid.dim, 4))
    return basis, (default_dt(grid) if dt is None else dt)


def _paths(basis, dt, T, seeds):
    if basis is None:
        return None
    return [sample_path(basis, dt, T, s) for s in seeds]


# ---------------------------------------------------------------------------
# dissipation


def phi1_entropy(xi):
    xi = np.asarray(xi, dtype=float)
    safe = np.where(xi > 0, xi, 1.0)
    return np.where(xi > 0, xi * np.log(safe), 0.0)


def phi2_sqrt(xi):
    return np.sqrt(np.maximum(xi, 0.0))


@dataclass
class DissipationReport:
    """Ensemble dissipation estimate on ``[0, T]``.

    ``psi1`` is the shifted entropy ``int (Phi1(rho) + 1/e)`` (nonnegative),
    ``psi2_integral`` the running time integral of ``int |grad Phi2(rho)|^2``.
    ``C_fit`` is the smallest constant with
    ``sup_{t<=T'} E psi1 + E int_0^T' psi2 <= C (T' + psi1(rho0))`` for every
    save time ``T' <= T``.
    """

    T: float
    times: np.ndarray
    psi1_mean: np.ndarray
    psi2_integral_mean: np.ndarray
    lhs: np.ndarray
    psi1_initial: float
    C_fit: float
    seeds: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"T": self.T, "times": self.times.tolist(), "psi1_mean": self.psi1_mean.tolist(),
                "psi2_integral_mean": self.psi2_integral_mean.tolist(), "lhs": self.lhs.tolist(),
                "psi1_initial": self.psi1_initial, "C_fit": self.C_fit, "seeds": list(self.seeds)}


def _dissipation_series(rho, grid, phi1, phi2):
    vol = grid.cell_volume
    p1 = vol * _flat_sum(phi1(rho) + 1.0 / math.e, grid.dim)
    p2 = vol * _flat_sum(_grad_sq(phi2(rho), grid), grid.dim)
    return p1, p2


def dissipation_check(cs: CoefficientSet, rho0, T: float, n_paths: int, seeds=None, noise: NoiseBasis | None = None,
                      dt: float | None = None, save_every: float | None = None, phi1=phi1_entropy,
                      phi2=phi2_sqrt) -> DissipationReport:
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    basis, dt = _setup(grid, cs, noise, dt)
    seeds = list(range(n_paths)) if seeds is None else list(seeds)[:n_paths]
    if basis is None:
        seeds = seeds[:1]
    every = save_every or dt

    def probe(rho, j):
        p1, p2 = _dissipation_series(rho, grid, phi1, phi2)
        return {"diss_psi1": p1, "diss_psi2": p2}

    ens = solve_ensemble(np.stack([rho0] * len(seeds)), 0.0, T, cs, _paths(basis, dt, T, seeds), every, dt=dt,
                         keep_states=False, probe=probe)
    t = ens.times
    psi1 = ens.series["diss_psi1"].mean(axis=0)
    psi2 = ens.series["diss_psi2"]
    cum = np.concatenate([np.zeros((psi2.shape[0], 1)), np.cumsum(0.5 * np.diff(t) * (psi2[:, 1:] + psi2[:, :-1]), axis=1)],
                         axis=1).mean(axis=0)
    lhs = np.maximum.accumulate(psi1) + cum
    p0 = float(_dissipation_series(rho0[None], grid, phi1, phi2)[0][0])
    C = float(np.max(lhs[1:] / (t[1:] + p0)))
    return DissipationReport(T, t, psi1, cum, lhs, p0, C, seeds)


def dissipation_sweep(cs: CoefficientSet, rho0, Ts, n_paths: int, seeds=None, **kw) -> dict:
    """Run :func:`dissipation_check` for several horizons and summarise stability of ``C``."""
    reports = [dissipation_check(cs, rho0, T, n_paths, seeds, **kw) for T in Ts]
    Cs = np.array([r.C_fit for r in reports])
    lhs_end = np.array([r.lhs[-1] for r in reports])
    slope = loglog_fit(Ts, lhs_end)[0] if len(Ts) >= 2 and np.all(lhs_end > 0) else float("nan")
    # sublevel thresholds of the compactness argument for one-point (4C) and two-point (8C) occupation
    return {"T": list(Ts), "C_fit": Cs.tolist(), "stability_ratio": float(Cs.max() / Cs.min()),
            "lhs_growth_exponent": slope, "superlinear": bool(slope > 1.05),
            "threshold_one_point": float(4 * Cs.max()), "threshold_two_point": float(8 * Cs.max()),
            "reports": reports}


# ---------------------------------------------------------------------------
# two-point coupling


@dataclass
class TwoPointStats:
    horizons: np.ndarray
    estimates: np.ndarray
    counts: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    delta: float
    n_paths: int
    seeds: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")

    @property
    def decreasing(self) -> bool:
        """Last estimate below the first with disjoint Wilson intervals."""
        return bool(self.estimates[-1] < self.estimates[0] and self.ci_high[-1] < self.ci_low[0])

    def to_dict(self) -> dict:
        return {"horizons": self.horizons.tolist(), "estimates": self.estimates.tolist(),
                "counts": self.counts.tolist(), "ci_low": self.ci_low.tolist(), "ci_high": self.ci_high.tolist(),
                "delta": self.delta, "n_paths": self.n_paths, "decreasing": self.decreasing}


def two_point_stats_from_counts(horizons, counts, n_paths, delta, seeds=()) -> TwoPointStats:
    counts = np.asarray(counts, dtype=np.int64)
    ci = np.array([wilson_interval(int(k), n_paths) for k in counts])
    return TwoPointStats(np.asarray(horizons, dtype=float), counts / n_paths, counts, ci[:, 0], ci[:, 1],
                         float(delta), int(n_paths), list(seeds))


def two_point_run(rho01, rho02, cs: CoefficientSet, horizons, delta: float = DEFAULT_DELTA, n_paths: int = 200,
                  seed0: int = 0, noise: NoiseBasis | None = None, dt: float | None = None) -> TwoPointStats:
    """Estimate ``P(d(t) > delta)`` from independent coupled pairs (shared noise within a pair)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    rho01 = np.asarray(rho01, dtype=float)
    grid = grid_of(rho01)
    basis, dt = _setup(grid, cs, noise, dt)
    horizons = sorted(float(h) for h in horizons)
    steps = [steps_of(h, dt, "horizon") for h in horizons]
    every = math.gcd(*steps)
    T = horizons[-1]
    seeds = [derive_seed(seed0, i) for i in range(n_paths)]
    if basis is None:
        reports = coupled_ensemble(rho01, rho02, cs, None, T, save_every=every * dt, dt=dt) * n_paths
    else:
        reports = coupled_ensemble(rho01, rho02, cs, _paths(basis, dt, T, seeds), T, save_every=every * dt)
    idx = [s // every for s in steps]
    d = np.array([[r.distance[i] for i in idx] for r in reports])
    counts = np.sum(d > delta, axis=0)
    return two_point_stats_from_counts(horizons, counts, n_paths, delta, seeds)


def mixing_fit(stats: TwoPointStats, n_boot: int = N_BOOT, seed: int = 0) -> dict:
    """Fit ``log P(d > delta) = sqrt(ln t) log(1 - alpha) + c`` over horizons ``t > 1``.

    The bootstrap resamples binomial counts at each horizon.
    """
    t = stats.horizons
    p = stats.estimates
    if np.all(p == 0):
        return {"status": "fully mixed before first horizon", "alpha_hat": float("nan")}
    use = (t > 1.0) & (p > 0)
    if use.sum() < 4:
        raise ValueError("need at least four horizons t > 1 with nonzero estimates")
    x = np.sqrt(np.log(t[use]))

    def fit(pp):
        y = np.log(pp)
        slope, intercept = np.polyfit(x, y, 1)
        return float(slope), float(intercept)

    slope, intercept = fit(p[use])
    alpha = 1.0 - math.exp(slope)
    out = {"status": "ok", "alpha_hat": alpha, "slope": slope, "intercept": intercept,
           "rate_curve": {"t": t[use].tolist(), "fitted": np.exp(intercept + slope * x).tolist()},
           "residuals": (np.log(p[use]) - (intercept + slope * x)).tolist()}
    if n_boot and stats.n_paths > 1:
        rng = np.random.default_rng(seed)
        boots = []
        for _ in range(n_boot):
            k = rng.binomial(stats.n_paths, p[use])
            if np.all(k > 0):
                boots.append(1.0 - math.exp(fit(k / stats.n_paths)[0]))
        if len(boots) >= 10:
            out["alpha_ci"] = [float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))]
    return out


def synthetic_two_point(alpha: float, horizons, amplitude: float = 0.8, n_paths: int | None = None,
                        seed: int = 0) -> TwoPointStats:
    """Two-point statistics following ``amplitude (1 - alpha)^sqrt(ln t)``.

    With ``n_paths=None`` the estimates are the exact law; otherwise counts are
    binomial draws.
    """
    t = np.asarray(horizons, dtype=float)
    p = amplitude * (1.0 - alpha) ** np.sqrt(np.log(np.maximum(t, 1.0)))
    if n_paths is None:
        z = np.zeros_like(p)
        return TwoPointStats(t, p, z, p, p, DEFAULT_DELTA, 1)
    counts = np.random.default_rng(seed).binomial(n_paths, p)
    return two_point_stats_from_counts(t, counts, n_paths, DEFAULT_DELTA)


# ---------------------------------------------------------------------------
# deterministic flow and support


def deterministic_flow(rho0, T: float, cs: CoefficientSet, dt: float | None = None,
                       save_every: float | None = None) -> Trajectory:
    """Noiseless solution; requires ``epsilon = 0``."""
    if cs.epsilon != 0.0:
        raise ValueError("deterministic_flow needs epsilon = 0 (use cs.with_epsilon(0.0))")
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    dt = default_dt(grid) if dt is None else dt
    return solve(rho0, 0.0, T, cs, None, save_every=save_every, dt=dt)


def default_family(grid: Grid, mass: float = 1.0) -> list[np.ndarray]:
    """Smooth strictly positive initial data of equal mass: cosine bumps and wrapped Gaussians."""
    x = grid.centers
    fam = []
    for k, phase in ((1, 0.0), (1, 0.5 * np.pi), (2, 0.0)):
        arg = sum(2 * np.pi * k * xa for xa in x) + phase
        fam.append(1.0 + 0.5 * np.cos(arg))
    for centre in (0.25, 0.7):
        g = np.zeros(grid.shape)
        for shift in itertools.product((-1, 0, 1), repeat=grid.dim):
            r2 = sum((xa - centre - s) ** 2 for xa, s in zip(x, shift))
            g = g + np.exp(-r2 / (2 * 0.1**2))
        fam.append(0.5 + g)
    return [mass * f / float(grid.integrate(f)) for f in fam]


def contractivity_profile(cs: CoefficientSet, family, T: float, dt: float | None = None,
                          save_every: float | None = None) -> dict:
    """``C_R(t)``: largest pairwise distance of deterministic solutions from ``family``.

    Reports the fitted exponential decay rate and whether ``C_R(T)`` fell
    below one percent of ``C_R(0)``.
    """
    family = [np.asarray(f, dtype=float) for f in family]
    grid = grid_of(family[0])
    dt = default_dt(grid) if dt is None else dt
    ens = solve_ensemble(np.stack(family), 0.0, T, cs.with_epsilon(0.0) if cs.epsilon else cs, None,
                         save_every, dt=dt)
    S = ens.states
    n = len(family)
    CR = np.zeros(len(ens.times))
    for i in range(n):
        for j in range(i + 1, n):
            CR = np.maximum(CR, grid.l1(S[i] - S[j]))
    rate = float("nan")
    pos = CR > 1e-13
    if pos.sum() >= 2 and CR[0] > 0:
        slope = np.polyfit(ens.times[pos], np.log(CR[pos]), 1)[0]
        rate = float(-slope)
    contractive = bool(CR[0] == 0 or CR[-1] < 1e-2 * CR[0])
    return {"times": ens.times.tolist(), "C_R": CR.tolist(), "decay_rate": rate, "contractive": contractive}


def support_proximity(rho0, cs: CoefficientSet, T: float, delta: float, n_paths: int, seed0: int = 0,
                      noise: NoiseBasis | None = None, dt: float | None = None) -> dict:
    """Fraction of paths with ``int_0^T ||rho(t) - u(t)||_{L1} dt <= delta / 2``."""
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    basis, dt = _setup(grid, cs, noise, dt)
    u = solve(rho0, 0.0, T, cs.with_epsilon(0.0) if cs.epsilon else cs, None, save_every=dt, dt=dt).states

    def probe(rho, j):
        return {"dist_to_flow": grid.cell_volume * np.sum(np.abs(rho - u[j]).reshape(rho.shape[0], -1), axis=1)}

    seeds = [derive_seed(seed0, i) for i in range(n_paths)]
    paths = _paths(basis, dt, T, seeds)
    if paths is None:
        seeds = seeds[:1]
    ens = solve_ensemble(np.stack([rho0] * len(seeds)), 0.0, T, cs, paths, dt, dt=dt, keep_states=False, probe=probe)
    d = ens.series["dist_to_flow"]
    integral = np.sum(0.5 * np.diff(ens.times) * (d[:, 1:] + d[:, :-1]), axis=1)
    hits = int(np.sum(integral <= delta / 2))
    prob = hits / len(seeds)
    lo, hi = wilson_interval(hits, len(seeds))
    return {"probability": prob, "ci": [lo, hi], "min_delta": float(2 * integral.min()),
            "integrals": integral.tolist(), "n_paths": len(seeds)}


# ---------------------------------------------------------------------------
# occupation measures and Markov consistency


def occupation_measure(rho0, cs: CoefficientSet, T: float, burn_in: float, stride: float, feature_map: str = "var",
                       seeds=(0,), noise: NoiseBasis | None = None, dt: float | None = None) -> EmpiricalMeasure:
    """Features of states at ``burn_in + k * stride`` (``k >= 1``) up to ``T``, pooled over ``seeds``."""
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    basis, dt = _setup(grid, cs, noise, dt)
    if stride < dt * (1 - 1e-12):
        raise ValueError("stride must be at least dt")
    steps_of(burn_in, stride, "burn_in")
    if T <= burn_in:
        raise ValueError("empty sample window: T <= burn_in")
    seeds = list(seeds)
    paths = _paths(basis, dt, T, seeds)
    if paths is None:
        seeds = seeds[:1]
    ens = solve_ensemble(np.stack([rho0] * len(seeds)), 0.0, T, cs, paths, stride, dt=dt)
    keep = ens.times > burn_in + 1e-12
    if not keep.any():
        raise ValueError("empty sample window")
    X = features(ens.states[:, keep], grid, feature_map)
    return EmpiricalMeasure(feature_map, X.reshape(-1, X.shape[-1]))


def bootstrap_floor(mu: EmpiricalMeasure, n_boot: int = N_BOOT, seed: int = 0, level: float = 95.0) -> float:
    """Percentile of ``KR(mu, mu*)`` over bootstrap resamples ``mu*`` of ``mu``."""
    rng = np.random.default_rng(seed)
    vals = [kr_distance(mu, mu.resample(rng)) for _ in range(n_boot)]
    return float(np.percentile(vals, level))


def occupation_stability(rho0s, cs: CoefficientSet, T: float, burn_in: float, stride: float,
                         feature_map: str = "var", seeds=(0, 1), noise: NoiseBasis | None = None,
                         dt: float | None = None, n_boot: int = N_BOOT) -> dict:
    """Pairwise KR distances between single-run occupation measures vs. the bootstrap floor."""
    measures, labels = [], []
    for i, r0 in enumerate(rho0s):
        for s in seeds:
            measures.append(occupation_measure(r0, cs, T, burn_in, stride, feature_map, (s,), noise, dt))
            labels.append((i, s))
    floors = [bootstrap_floor(m, n_boot, seed=k) for k, m in enumerate(measures)]
    floor = max(floors)
    pairs = []
    for a in range(len(measures)):
        for b in range(a + 1, len(measures)):
            pairs.append({"a": labels[a], "b": labels[b], "kr": kr_distance(measures[a], measures[b])})
    worst = max(p["kr"] for p in pairs)
    return {"pairs": pairs, "floors": floors, "noise_floor": floor, "max_kr": worst,
            "kind": kr_distance_info(measures[0], measures[1])["kind"], "passed": bool(worst < 2 * floor)}


def chapman_kolmogorov_check(rho0, cs: CoefficientSet, s: float, t: float, n_paths: int,
                             feature_map: str = "moments", seed0: int = 0, noise: NoiseBasis | None = None,
                             dt: float | None = None, n_boot: int = N_BOOT) -> dict:
    """Compare the law of ``rho(t)`` with the law obtained by restarting at ``s`` on fresh noise.

    The band is the 95th percentile of the distance between two groups drawn
    with replacement from the pooled samples (the null of equal laws).
    """
    if not 0 <= s < t:
        raise ValueError("need 0 <= s < t")
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    basis, dt = _setup(grid, cs, noise, dt)
    steps_of(s, dt, "s")
    steps_of(t, dt, "t")
    P = n_paths if basis is not None else 1
    init = np.stack([rho0] * P)
    direct_seeds = [derive_seed(seed0, 0, i) for i in range(P)]
    first_seeds = [derive_seed(seed0, 1, i) for i in range(P)]
    fresh_seeds = [derive_seed(seed0, 2, i) for i in range(P)]
    direct = solve_ensemble(init, 0.0, t, cs, _paths(basis, dt, t, direct_seeds), dt=dt, keep_states=False).final
    if s > 0:
        mid = solve_ensemble(init, 0.0, s, cs, _paths(basis, dt, s, first_seeds), dt=dt, keep_states=False).final
    else:
        mid = init
    restarted = solve_ensemble(mid, s, t, cs, _paths(basis, dt, t, fresh_seeds), dt=dt, keep_states=False).final
    mu1 = EmpiricalMeasure(feature_map, features(direct, grid, feature_map))
    mu2 = EmpiricalMeasure(feature_map, features(restarted, grid, feature_map))
    info = kr_distance_info(mu1, mu2)
    pooled = np.concatenate([mu1.samples, mu2.samples])
    rng = np.random.default_rng(seed0)
    null = []
    for _ in range(n_boot):
        a = pooled[rng.integers(0, len(pooled), P)]
        b = pooled[rng.integers(0, len(pooled), P)]
        null.append(kr_distance(EmpiricalMeasure(feature_map, a), EmpiricalMeasure(feature_map, b)))
    band = float(np.percentile(null, 95.0))
    return {"distance": info["value"], "kind": info["kind"], "band": band,
            "within": bool(info["value"] <= band), "n_paths": P}
