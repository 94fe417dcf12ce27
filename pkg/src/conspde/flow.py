"""Pathwise checks: L1 contraction, semiflow and cocycle identities, initial-time modulus."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSet
from .noise import NoisePath, shift_path, steps_of
from .solver import grid_of, solve, solve_ensemble
from .stats import bootstrap_ci, loglog_fit

DEFAULT_TOL = 5e-3


@dataclass
class CouplingReport:
    """Distance between two solutions driven by one noise path.

    ``bound`` is ``C(t) d(0)`` with ``C(t) = exp(t (||B||_Lip + ||f||_Lip))``.
    ``max_increase`` is the largest ratio ``d(t2) / d(t1)`` over ``t1 <= t2``,
    which should not exceed ``1 + tol`` when ``B = f = 0``; distances below
    ``1e-9 d(0)`` count as round-off.
    """

    times: np.ndarray
    distance: np.ndarray
    bound: np.ndarray
    max_ratio: float
    violations: int
    tol: float
    degenerate: bool = False
    max_increase: float = 1.0
    seed: int | None = None

    @property
    def passed(self) -> bool:
        if self.degenerate:
            return bool(np.max(self.distance) < 1e-10)
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "distance": self.distance.tolist(), "bound": self.bound.tolist(),
                "max_ratio": self.max_ratio, "violations": self.violations, "tol": self.tol,
                "degenerate": self.degenerate, "max_increase": self.max_increase, "seed": self.seed}


def _report(times, d, rate, tol, t0, seed=None) -> CouplingReport:
    C = np.exp((times - t0) * rate)
    bound = C * d[0]
    if d[0] == 0.0:
        return CouplingReport(times, d, bound, 0.0, int(np.sum(d >= 1e-10)), tol, True, 1.0, seed)
    ratio = d / bound
    # relative growth, ignoring distances at round-off level
    floor = 1e-9 * d[0]
    inc = d / np.maximum(np.minimum.accumulate(d), floor)
    return CouplingReport(times, d, bound, float(ratio.max()), int(np.sum(ratio > 1.0 + tol)), tol, False,
                          float(inc.max()), seed)


def _pair_probe(grid):
    def probe(rho, j):
        diff = np.abs(rho[0::2] - rho[1::2]).reshape(rho.shape[0] // 2, -1)
        d = grid.cell_volume * np.sum(diff, axis=1)
        return {"pair_distance": np.repeat(d, 2)}
    return probe


def coupled_ensemble(rho01, rho02, cs: CoefficientSet, paths, T: float, tol: float = DEFAULT_TOL,
                     save_every: float | None = None, dt: float | None = None, s: float = 0.0) -> list[CouplingReport]:
    """One :class:`CouplingReport` per path; the two members of a pair share the path.

    Distances are evaluated at every save time (every step by default).
    """
    rho01 = np.asarray(rho01, dtype=float)
    rho02 = np.asarray(rho02, dtype=float)
    if rho01.shape != rho02.shape:
        raise ValueError("initial data live on different grids")
    grid = grid_of(rho01)
    if paths is None:
        if dt is None:
            raise ValueError("dt is required without noise")
        pair_paths, n_pairs = None, 1
    else:
        paths = list(paths)
        n_pairs = len(paths)
        pair_paths = [p for p in paths for _ in range(2)]
        dt = paths[0].dt
    rho0 = np.stack([rho01, rho02] * n_pairs)
    every = dt if save_every is None else save_every
    ens = solve_ensemble(rho0, s, T, cs, pair_paths, every, dt=dt, keep_states=False, probe=_pair_probe(grid))
    rate = cs.contraction_rate()
    seeds = [None] * n_pairs if paths is None else [p.seed for p in paths]
    return [_report(ens.times, ens.series["pair_distance"][2 * i], rate, tol, s, seeds[i]) for i in range(n_pairs)]


def contraction_report(rho01, rho02, cs: CoefficientSet, path: NoisePath | None, T: float,
                       tol: float = DEFAULT_TOL, save_every: float | None = None,
                       dt: float | None = None) -> CouplingReport:
    """Couple two initial data through the same noise path and compare with ``C(t) d(0)``."""
    return coupled_ensemble(rho01, rho02, cs, None if path is None else [path], T, tol, save_every, dt)[0]


def _l1(grid, a, b) -> float:
    return float(grid.l1(a - b))


def semiflow_residual(rho0, s: float, s1: float, t: float, cs: CoefficientSet, path: NoisePath | None,
                      dt: float | None = None) -> float:
    """``|| rho(t, s, rho0) - rho(t, s1, rho(s1, s, rho0)) ||_{L1}``."""
    if not s <= s1 <= t:
        raise ValueError("need s <= s1 <= t")
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    h = dt if path is None else path.dt
    for name, val in (("s", s), ("s1", s1), ("t", t)):
        steps_of(val, h, name)
    direct = solve(rho0, s, t, cs, path, dt=dt, keep_states=False).final
    mid = solve(rho0, s, s1, cs, path, dt=dt, keep_states=False).final
    restart = solve(mid, s1, t, cs, path, dt=dt, keep_states=False).final
    return _l1(grid, direct, restart)


def cocycle_residual(rho0, s: float, t: float, cs: CoefficientSet, path: NoisePath) -> float:
    """``|| rho(t + s, s, rho0, w) - rho(t, 0, rho0, theta_s w) ||_{L1}``."""
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    steps_of(s, path.dt, "s")
    steps_of(t, path.dt, "t")
    if path.origin != 0.0:
        raise ValueError("cocycle check expects a path with origin 0")
    a = solve(rho0, s, s + t, cs, path, keep_states=False).final
    b = solve(rho0, 0.0, t, cs, shift_path(path, s), keep_states=False).final
    return _l1(grid, a, b)


@dataclass
class ModulusFit:
    eta_fit: float
    X_fit: float
    pairs: list[tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"eta_fit": self.eta_fit, "X_fit": self.X_fit, "pairs": [list(p) for p in self.pairs]}


def _modulus_from_sup(s_grid, sup_d, min_sep) -> ModulusFit:
    pairs, xs, ys = [], [], []
    for i in range(len(s_grid)):
        for j in range(i + 1, len(s_grid)):
            gap = abs(s_grid[j] - s_grid[i])
            d = float(sup_d[i, j])
            pairs.append((float(s_grid[i]), float(s_grid[j]), d))
            if gap >= min_sep and d > 0:
                xs.append(gap)
                ys.append(d)
    if len(xs) < 2:
        return ModulusFit(float("nan"), float("nan"), pairs)
    eta, X = loglog_fit(xs, ys)
    return ModulusFit(eta, X, pairs)


def initial_time_modulus_ensemble(rho0, s_grid, T: float, cs: CoefficientSet, paths, dt: float | None = None,
                                  resolution: float | None = None) -> list[ModulusFit]:
    """Hoelder fit of ``sup_t || rho(t, s_i) - rho(t, s_j) ||`` against ``|s_i - s_j|`` per path.

    Distances are compared on the common save grid (``resolution``, default
    one step) over ``t >= max(s_i, s_j)``.  Pairs closer than four steps are
    excluded from the fit.
    """
    s_grid = [float(v) for v in s_grid]
    if len(s_grid) < 3:
        raise ValueError("need at least three initial times")
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    if paths is None:
        if dt is None:
            raise ValueError("dt is required without noise")
        paths_, P = None, 1
    else:
        paths_ = list(paths)
        P = len(paths_)
        dt = paths_[0].dt
    res = dt if resolution is None else resolution
    res_steps = steps_of(res, dt, "resolution")
    t_end = steps_of(T, dt, "T")
    runs = []
    for s in s_grid:
        i0 = steps_of(s, dt, "initial time")
        if i0 % res_steps or not 0 <= i0 <= t_end:
            raise ValueError(f"initial time {s} must lie in [0, T] on the resolution grid")
        ens = solve_ensemble(np.stack([rho0] * P), s, T, cs, paths_, res, dt=dt)
        runs.append((i0 // res_steps, ens.states))
    n = len(s_grid)
    sup_d = np.zeros((P, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            (ai, Si), (aj, Sj) = runs[i], runs[j]
            start = max(ai, aj)
            xi = Si[:, start - ai :]
            xj = Sj[:, start - aj :]
            m = min(xi.shape[1], xj.shape[1])
            diff = np.abs(xi[:, :m] - xj[:, :m]).reshape(P, m, -1)
            d = grid.cell_volume * np.sum(diff, axis=2)
            sup_d[:, i, j] = sup_d[:, j, i] = d.max(axis=1)
    return [_modulus_from_sup(s_grid, sup_d[p], 4 * dt - 1e-12) for p in range(P)]


def initial_time_modulus(rho0, s_grid, T: float, cs: CoefficientSet, path: NoisePath | None,
                         dt: float | None = None, resolution: float | None = None) -> ModulusFit:
    return initial_time_modulus_ensemble(rho0, s_grid, T, cs, None if path is None else [path], dt, resolution)[0]


def eta_confidence(fits: list[ModulusFit], n_resamples: int = 1000, seed: int = 0) -> dict:
    """Mean fitted exponent across paths with a percentile bootstrap interval."""
    etas = np.array([f.eta_fit for f in fits if np.isfinite(f.eta_fit)])
    lo, hi = bootstrap_ci(etas, np.mean, n_resamples, seed=seed)
    return {"eta_mean": float(etas.mean()), "ci_low": lo, "ci_high": hi, "n_paths": int(etas.size)}
