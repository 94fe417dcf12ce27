"""Projected Galerkin scheme for ``v = Phi(rho)``.

Ito's formula gives an equation for ``v`` whose drift is
``Phi'(rho) (Lap v - div(nu + B) - f)`` plus the second-order correction
``(eps / 2) Phi''(rho) sum_j |div(sigma(rho) lambda_j e_j)|^2`` and whose noise
is ``-sqrt(eps) Phi'(rho) div(sigma(rho) dW)``.  Products are formed on the
grid, everything is projected onto ``|k|_inf <= N_modes`` and time stepping is
exponential Euler with stabilising diffusivity ``c = max Phi'(rho)`` treated
exactly, so the heat equation is integrated exactly mode by mode.
"""

from __future__ import annotations

import math

import numpy as np

from .coefficients import CoefficientSet, ScalarFunction
from .grid import Grid
from .noise import NoisePath, steps_of
from .solver import SERIES, Trajectory, _build_scatter, diagnostics, grid_of, scatter_field


def _odd(fn: ScalarFunction, x: np.ndarray):
    """Values and derivatives of the odd extension ``g(-r) = -g(r)``."""
    s = np.sign(x)
    a = np.abs(x)
    return s * fn(a), fn.d1(a), s * fn.d2(a)


class _Spectral:
    def __init__(self, grid: Grid, n_modes: int):
        self.grid = grid
        self.axes = tuple(range(grid.dim))
        n = grid.n
        k_full = np.fft.fftfreq(n, d=1.0 / n)
        k_last = np.fft.rfftfreq(n, d=1.0 / n)
        ks = [k_full] * (grid.dim - 1) + [k_last]
        self.k = np.meshgrid(*ks, indexing="ij")
        keep = np.ones(self.k[0].shape, dtype=bool)
        for kk in self.k:
            keep &= np.abs(kk) <= n_modes
        self.keep = keep
        self.ik = []
        for kk in self.k:
            d = 2j * np.pi * kk
            d = np.where(np.abs(kk) == n / 2, 0.0, d)  # Nyquist derivative set to zero
            self.ik.append(d)
        self.k2 = sum((2 * np.pi * kk) ** 2 for kk in self.k)

    def fwd(self, u):
        return np.fft.rfftn(u, axes=self.axes)

    def inv(self, U):
        return np.fft.irfftn(U, s=self.grid.shape, axes=self.axes)

    def grad(self, U):
        return [self.inv(d * U) for d in self.ik]

    def div(self, fields):
        return self.inv(sum(d * self.fwd(f) for d, f in zip(self.ik, fields)))


def solve_galerkin(rho0: np.ndarray, T: float, cs: CoefficientSet, path: NoisePath | None, N_modes: int,
                   dt: float | None = None, save_every: float | None = None) -> Trajectory:
    """Integrate the projected ``v``-equation from time 0 (the path origin) to ``T``.

    Returns the trajectory of ``rho_N = Phi^{-1}(v_N)`` on the grid of ``rho0``.
    """
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0)
    if not 1 <= N_modes <= grid.n // 2:
        raise ValueError(f"N_modes must lie in [1, {grid.n // 2}]")
    noisy = not cs.noiseless
    if path is not None:
        if dt is not None and dt != path.dt:
            raise ValueError("dt differs from the path's time step")
        dt = path.dt
    if dt is None:
        raise ValueError("dt is required without a noise path")
    if noisy and path is None:
        raise ValueError("a noise path is required when epsilon > 0 and sigma is nonzero")
    n_steps = steps_of(T, dt, "T")
    if path is not None and n_steps > path.n_steps:
        raise ValueError("path does not cover [0, T]")
    every = n_steps if save_every is None else steps_of(save_every, dt, "save_every")
    every = max(every, 1)

    sp = _Spectral(grid, N_modes)
    sqrt_eps = math.sqrt(cs.epsilon)

    if noisy:
        basis = path.basis
        scatter = [_build_scatter(basis, grid, a, at_centers=True) for a in range(grid.dim)]
        pts = grid.centers
        lam2 = (basis.amplitudes**2).reshape((-1,) + (1,) * grid.dim)
        e = basis.evaluate(pts)
        de = basis.gradient(pts)
        S0 = np.sum(lam2 * e * e, axis=0)
        S1 = [np.sum(lam2 * e * de[:, a], axis=0) for a in range(grid.dim)]
        S2 = [np.sum(lam2 * de[:, a] ** 2, axis=0) for a in range(grid.dim)]
    V = sp.fwd(cs.phi(rho0)) * sp.keep
    v = sp.inv(V)
    rho = cs.invert_phi(v)

    times, states, rec = [0.0], [rho.copy()], [diagnostics(np.maximum(rho, 0.0)[None], cs, grid)]
    n = 0
    while n < n_steps:
        m = min(n_steps, n + 1024)
        block = path.block(n, m) if noisy else None
        for k in range(n, m):
            _, dphi, d2phi = _odd(cs.phi, rho)
            # stabilising diffusivity: the current maximum of Phi'
            c = max(1.0, float(np.max(dphi)))
            decay = np.exp(-c * sp.k2 * dt)
            grads = sp.grad(V)  # grad v
            lap = sp.inv(-sp.k2 * V)
            drift = (dphi - c) * lap
            if not cs.nu.is_zero:
                prof = np.sign(rho) * cs.nu.profile(np.abs(rho))
                drift -= dphi * sp.div([cs.nu.velocity[a] * prof for a in range(grid.dim)])
            if not cs.B.is_zero:
                drift -= dphi * sp.div([_drift_centers(rho, cs, grid, a) for a in range(grid.dim)])
            if not cs.f.is_zero:
                drift -= dphi * _odd(cs.f, rho)[0]
            incr = dt * drift
            if noisy:
                sig, dsig, _ = _odd(cs.sigma, rho)
                grad_rho = [g_ / dphi for g_ in grads]
                ito = np.zeros_like(rho)
                for a in range(grid.dim):
                    ito += (dsig * grad_rho[a]) ** 2 * S0 + 2 * sig * dsig * grad_rho[a] * S1[a] + sig**2 * S2[a]
                incr += dt * 0.5 * cs.epsilon * d2phi * ito
                dW = block[:, k - n][None, :]
                W = [scatter_field(scatter[a], dW, grid)[0] for a in range(grid.dim)]
                incr -= sqrt_eps * dphi * sp.div([sig * W[a] for a in range(grid.dim)])
            V = decay * (V + sp.fwd(incr)) * sp.keep
            v = sp.inv(V)
            rho = cs.invert_phi(v)
            if not np.all(np.isfinite(rho)):
                raise FloatingPointError(f"non-finite Galerkin state after step {k}")
            if (k + 1) % every == 0 or k + 1 == n_steps:
                times.append((k + 1) * dt)
                states.append(rho.copy())
                rec.append(diagnostics(np.maximum(rho, 0.0)[None], cs, grid))
        n = m
    series = {name: np.array([r[name][0] for r in rec]) for name in SERIES}
    return Trajectory(grid, np.array(times), series, states[-1], np.array(states))


def _drift_centers(rho, cs, grid, a):
    x = grid.centers[a]
    C = grid.integrate(rho * np.cos(2 * np.pi * x))
    S = grid.integrate(rho * np.sin(2 * np.pi * x))
    return cs.B.strength * (np.sin(2 * np.pi * x) * C - np.cos(2 * np.pi * x) * S)


def mode_coefficients(traj: Trajectory, cs: CoefficientSet) -> np.ndarray:
    """Fourier coefficients of ``v = Phi(rho)`` at each save time."""
    axes = tuple(range(1, 1 + traj.grid.dim))
    return np.fft.rfftn(cs.phi(traj.states), axes=axes)
