"""Mass-exact finite-volume integrator for conservative SPDEs in Ito form.

All arrays carry a leading ensemble axis: ``rho`` has shape ``(B, n)`` in one
dimension and ``(B, n, n)`` in two.  Every operation acts on each member
independently (elementwise arithmetic, per-row FFTs, per-row reductions), so
a member's result does not depend on which other members share its batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSet
from .grid import Grid
from .noise import NoiseBasis, NoisePath, steps_of

CHUNK_STEPS = 1024
ENSEMBLE_CHUNK = 64


class CFLError(ValueError):
    """Raised instead of taking a step that violates the stability bound."""


class NonFiniteError(FloatingPointError):
    def __init__(self, step: int):
        super().__init__(f"non-finite field after step {step}")
        self.step = step


@dataclass
class State:
    grid: Grid
    rho: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        if self.rho.shape != self.grid.shape:
            raise ValueError(f"rho has shape {self.rho.shape}, grid wants {self.grid.shape}")
        if not np.all(np.isfinite(self.rho)):
            raise ValueError("rho has non-finite entries")
        if np.any(self.rho < 0):
            raise ValueError("rho must be nonnegative")

    @property
    def mass(self) -> float:
        return float(self.grid.integrate(self.rho))


def grid_of(rho: np.ndarray, batched: bool = False) -> Grid:
    shape = rho.shape[1:] if batched else rho.shape
    if len(shape) not in (1, 2) or len(set(shape)) != 1:
        raise ValueError(f"cannot infer a square grid from shape {shape}")
    return Grid(len(shape), shape[0])


# ---------------------------------------------------------------------------
# diagnostics


def _flat_sum(x: np.ndarray, dim: int) -> np.ndarray:
    # per-member reduction with a fixed summation order
    return np.sum(x.reshape(x.shape[: x.ndim - dim] + (-1,)), axis=-1)


def _grad_sq(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward-difference ``|grad_h u|^2`` on faces, batched."""
    out = np.zeros_like(u)
    for a in range(grid.dim):
        ax = u.ndim - grid.dim + a
        d = (np.roll(u, -1, axis=ax) - u) / grid.h
        out += d * d
    return out


def entropy_density(rho: np.ndarray) -> np.ndarray:
    """``xi log xi`` with ``0 log 0 = 0``."""
    safe = np.where(rho > 0, rho, 1.0)
    return np.where(rho > 0, rho * np.log(safe), 0.0)


SERIES = ("mass", "entropy", "psi2", "grad_phi", "sigma2", "nu_abs", "reaction", "reaction_w11")


def diagnostics(rho: np.ndarray, cs: CoefficientSet, grid: Grid) -> dict[str, np.ndarray]:
    """Per-member functionals of a batch of states.

    ``entropy`` is the integral of ``xi log xi``; ``psi2`` the Dirichlet energy of
    ``sqrt(rho)``; ``grad_phi`` that of ``Phi(rho)``; ``sigma2`` and ``nu_abs``
    the flux integrability quantities; ``reaction`` the integral of ``f(rho)``
    and ``reaction_w11`` its ``W^{1,1}`` norm.
    """
    vol = grid.cell_volume
    d = grid.dim
    fr = cs.f(rho)
    return {
        "mass": vol * _flat_sum(rho, d),
        "entropy": vol * _flat_sum(entropy_density(rho), d),
        "psi2": vol * _flat_sum(_grad_sq(np.sqrt(rho), grid), d),
        "grad_phi": vol * _flat_sum(_grad_sq(cs.phi(rho), grid), d),
        "sigma2": vol * _flat_sum(cs.sigma(rho) ** 2, d),
        "nu_abs": vol * _flat_sum(cs.nu.magnitude(rho), d),
        "reaction": vol * _flat_sum(fr, d),
        "reaction_w11": vol * _flat_sum(np.abs(fr) + np.sqrt(_grad_sq(fr, grid)), d),
    }


@dataclass
class Trajectory:
    """One solution sampled at save times.

    ``states`` may be ``None`` when only diagnostics were kept; ``final`` is
    always the state at the last save time.
    """

    grid: Grid
    times: np.ndarray
    series: dict[str, np.ndarray]
    final: np.ndarray
    states: np.ndarray | None = None
    step_index: np.ndarray | None = None

    @property
    def mass(self) -> np.ndarray:
        return self.series["mass"]

    def state(self, i: int = -1) -> State:
        rho = self.final if (self.states is None and i in (-1, len(self.times) - 1)) else self.states[i]
        return State(self.grid, rho, float(self.times[i]))

    def identical(self, other: "Trajectory") -> bool:
        """Bit-exact comparison of everything recorded."""
        if not np.array_equal(self.times, other.times) or not np.array_equal(self.final, other.final):
            return False
        if (self.states is None) != (other.states is None):
            return False
        if self.states is not None and not np.array_equal(self.states, other.states):
            return False
        return self.series.keys() == other.series.keys() and all(
            np.array_equal(self.series[k], other.series[k]) for k in self.series)


@dataclass
class EnsembleTrajectory:
    grid: Grid
    times: np.ndarray
    series: dict[str, np.ndarray]
    final: np.ndarray
    states: np.ndarray | None = None

    def __len__(self) -> int:
        return self.final.shape[0]

    def member(self, b: int) -> Trajectory:
        return Trajectory(self.grid, self.times, {k: v[b] for k, v in self.series.items()}, self.final[b],
                          None if self.states is None else self.states[b])


# ---------------------------------------------------------------------------
# the stepper


@dataclass
class _NoiseScatter:
    """Maps channel increments to the spectrum of the face noise field."""

    flat_index: np.ndarray
    channels: np.ndarray  # (4, Q) channel ids: (q, cos), (-q, cos), (q, sin), (-q, sin)
    weights: np.ndarray  # (4, Q) complex
    phase: np.ndarray  # (Q,) complex shift to face positions


def _build_scatter(basis: NoiseBasis, grid: Grid, axis: int, at_centers: bool = False) -> _NoiseScatter:
    if basis.dim != grid.dim:
        raise ValueError("noise basis and grid dimensions differ")
    if basis.mode_cutoff >= grid.n // 2:
        raise ValueError(f"mode cutoff {basis.mode_cutoff} not resolved on n={grid.n}")
    index = {(m.k, m.phase): j for j, m in enumerate(basis.modes)}
    amps = basis.amplitudes
    ks = sorted({m.k for m in basis.modes})
    r2 = math.sqrt(2.0) / 2.0
    chans = np.zeros((4, len(ks)), dtype=np.int64)
    w = np.zeros((4, len(ks)), dtype=complex)
    flat = np.zeros(len(ks), dtype=np.int64)
    phase = np.zeros(len(ks), dtype=complex)
    shift = np.full(grid.dim, 0.5 * grid.h)
    if not at_centers:
        shift[axis] += 0.5 * grid.h
    for i, q in enumerate(ks):
        mq = tuple(-c for c in q)
        jc, jmc = index[(q, "cos")], index[(mq, "cos")]
        js, jms = index[(q, "sin")], index[(mq, "sin")]
        chans[:, i] = [jc * grid.dim + axis, jmc * grid.dim + axis, js * grid.dim + axis, jms * grid.dim + axis]
        w[:, i] = [r2 * amps[jc], r2 * amps[jmc], -1j * r2 * amps[js], 1j * r2 * amps[jms]]
        flat[i] = np.ravel_multi_index(tuple(c % grid.n for c in q), grid.shape)
        phase[i] = np.exp(2j * np.pi * float(np.dot(q, shift)))
    return _NoiseScatter(flat, chans, w, phase)


def scatter_field(sc: _NoiseScatter, dW: np.ndarray, grid: Grid) -> np.ndarray:
    """Evaluate the noise field on the scatter's points for increments ``dW`` of shape ``(B, C)``."""
    B = dW.shape[0]
    coef = (dW[:, sc.channels[0]] * sc.weights[0] + dW[:, sc.channels[1]] * sc.weights[1]
            + dW[:, sc.channels[2]] * sc.weights[2] + dW[:, sc.channels[3]] * sc.weights[3])
    spec = np.zeros((B, grid.n**grid.dim), dtype=complex)
    spec[:, sc.flat_index] = coef * sc.phase
    spec = spec.reshape((B,) + grid.shape)
    axes = tuple(range(1, 1 + grid.dim))
    return np.fft.ifftn(spec, axes=axes).real * float(grid.n**grid.dim)


class Stepper:
    """Precomputed operators for one ``(grid, coefficients, basis, dt)``.

    Within a step the order is: reaction, explicit face transfers (first
    order terms, noise and, for fully explicit ``Phi``, diffusion) passed
    through a positivity limiter, the implicit ``phi_linear`` Laplacian solve,
    then sub-cycled explicit transfers of the Lipschitz remainder
    ``Phi - phi_linear * id``.  Every stage moves mass across faces only.
    """

    def __init__(self, grid: Grid, cs: CoefficientSet, dt: float, basis: NoiseBasis | None = None):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid, self.cs, self.dt, self.basis = grid, cs, float(dt), basis
        self.alpha = float(cs.phi_linear)
        self.noisy = not cs.noiseless
        if self.noisy and basis is None:
            raise ValueError("a noise basis is required when epsilon > 0 and sigma is nonzero")
        if not cs.f.is_zero and self.dt * cs.f_lip > 1.0:
            raise CFLError(f"dt * f_lip = {self.dt * cs.f_lip:g} exceeds 1")
        d = grid.dim
        self.cfl_limit = grid.h**2 / (2.0 * d * self.dt)  # bound on Phi' for explicit diffusion
        if self.alpha > 0:
            k = grid.wavenumbers()
            lam = sum(4.0 / grid.h**2 * np.sin(np.pi * kk / grid.n) ** 2 for kk in k)
            lam = lam[..., : grid.n // 2 + 1]
            self._implicit = 1.0 / (1.0 + self.alpha * self.dt * lam)
        self._scatter = [_build_scatter(basis, grid, a) for a in range(d)] if self.noisy else None
        if not cs.B.is_zero:
            c1 = grid.centers_1d
            self._b_cos = np.cos(2 * np.pi * c1)
            self._b_sin = np.sin(2 * np.pi * c1)
            faces = c1 + 0.5 * grid.h
            self._b_face_sin = np.sin(2 * np.pi * faces)
            self._b_face_cos = np.cos(2 * np.pi * faces)
        self._remainder = self.alpha > 0 and cs.phi.kind != "identity"
        self._has_explicit = self.alpha == 0 or self.noisy or not cs.nu.is_zero or not cs.B.is_zero

    # -- pieces --------------------------------------------------------

    def _ax(self, rho, a):
        return rho.ndim - self.grid.dim + a

    def noise_field(self, dW: np.ndarray, axis: int) -> np.ndarray:
        """Face values of ``sum_j lambda_j e_j dB^j`` for flux component ``axis``."""
        return scatter_field(self._scatter[axis], dW, self.grid)

    def _drift_field(self, rho: np.ndarray, a: int) -> np.ndarray:
        """``B_a`` at the faces normal to axis ``a``."""
        g = self.grid
        s = self.cs.B.strength
        ax = self._ax(rho, a)
        shp = [1] * rho.ndim
        shp[ax] = g.n
        cos_w = self._b_cos.reshape(shp)
        sin_w = self._b_sin.reshape(shp)
        C = g.cell_volume * _flat_sum(rho * cos_w, g.dim)
        S = g.cell_volume * _flat_sum(rho * sin_w, g.dim)
        bshape = (-1,) + (1,) * g.dim
        return s * (self._b_face_sin.reshape(shp) * C.reshape(bshape) - self._b_face_cos.reshape(shp) * S.reshape(bshape))

    def _explicit_transfers(self, rho: np.ndarray, dW: np.ndarray | None, step: int) -> list[np.ndarray]:
        g, cs, dt = self.grid, self.cs, self.dt
        out = []
        explicit_phi = self.alpha == 0
        if explicit_phi:
            dphi_max = np.max(cs.phi.d1(rho).reshape(rho.shape[0], -1), axis=1)
            if np.any(dphi_max > self.cfl_limit):
                raise CFLError(f"step {step}: max Phi' = {dphi_max.max():g} exceeds h^2/(2 d dt) = {self.cfl_limit:g}")
            phi = cs.phi(rho)
        for a in range(g.dim):
            ax = self._ax(rho, a)
            nxt = np.roll(rho, -1, axis=ax)
            T = np.zeros_like(rho)
            if explicit_phi:
                T -= (dt / g.h**2) * (np.roll(phi, -1, axis=ax) - phi)
            if not cs.nu.is_zero and cs.nu.velocity[a] != 0.0:
                prof = cs.nu.profile(rho)
                T += (dt / g.h) * cs.nu.velocity[a] * 0.5 * (prof + np.roll(prof, -1, axis=ax))
            if not cs.B.is_zero:
                T += (dt / g.h) * self._drift_field(rho, a)
            if dW is not None:
                face = 0.5 * (rho + nxt)
                T += (math.sqrt(cs.epsilon) / g.h) * cs.sigma(face) * self.noise_field(dW, a)
            out.append(T)
        return out

    def _limit(self, rho: np.ndarray, transfers: list[np.ndarray]) -> list[np.ndarray]:
        """Scale each cell's outgoing transfers so it cannot export more than it holds."""
        outflux = np.zeros_like(rho)
        for a, T in enumerate(transfers):
            ax = self._ax(rho, a)
            outflux += np.maximum(T, 0.0) + np.maximum(-np.roll(T, 1, axis=ax), 0.0)
        over = outflux > rho
        if not np.any(over):
            return transfers
        theta = np.where(over, rho / np.where(over, outflux, 1.0), 1.0)
        limited = []
        for a, T in enumerate(transfers):
            ax = self._ax(rho, a)
            donor = np.where(T > 0, theta, np.roll(theta, -1, axis=ax))
            limited.append(T * donor)
        return limited

    def _apply(self, rho: np.ndarray, transfers: list[np.ndarray]) -> np.ndarray:
        div = np.zeros_like(rho)
        for a, T in enumerate(transfers):
            div += T - np.roll(T, 1, axis=self._ax(rho, a))
        return rho - div

    def _implicit_solve(self, rho: np.ndarray) -> np.ndarray:
        g = self.grid
        axes = tuple(range(rho.ndim - g.dim, rho.ndim))
        u = np.fft.irfftn(np.fft.rfftn(rho, axes=axes) * self._implicit, s=g.shape, axes=axes)
        coef = self.alpha * self.dt / g.h**2
        transfers = [-coef * (np.roll(u, -1, axis=self._ax(rho, a)) - u) for a in range(g.dim)]
        return self._apply(rho, transfers)

    def _remainder_substeps(self, rho: np.ndarray, step: int) -> np.ndarray:
        g, cs = self.grid, self.cs
        slope = cs.phi.d1(rho) - self.alpha
        if np.any(slope < -1e-12):
            raise CFLError(f"step {step}: Phi' drops below the implicit coefficient {self.alpha:g}")
        smax = np.max(slope.reshape(rho.shape[0], -1), axis=1)
        m = np.maximum(np.ceil(smax / self.cfl_limit), 1).astype(np.int64)
        tau = self.dt / m
        bshape = (-1,) + (1,) * g.dim
        for sub in range(int(m.max())):
            active = (sub < m).reshape(bshape)
            psi = cs.phi(rho) - self.alpha * rho
            coef = (tau / g.h**2).reshape(bshape)
            transfers = [-coef * (np.roll(psi, -1, axis=self._ax(rho, a)) - psi) for a in range(g.dim)]
            rho = np.where(active, self._apply(rho, transfers), rho)
        return rho

    # -- public --------------------------------------------------------

    def step(self, rho: np.ndarray, dW: np.ndarray | None, step: int = 0) -> np.ndarray:
        """Advance a batch ``rho`` by one step with channel increments ``dW`` of shape ``(B, C)``."""
        cs = self.cs
        if not cs.f.is_zero:
            rho = rho - self.dt * cs.f(rho)
            rho = np.maximum(rho, 0.0)
        if self._has_explicit:
            transfers = self._explicit_transfers(rho, dW if self.noisy else None, step)
            rho = self._apply(rho, self._limit(rho, transfers))
        if self.alpha > 0:
            rho = self._implicit_solve(rho)
            if self._remainder:
                rho = self._remainder_substeps(rho, step)
        rho = np.maximum(rho, 0.0)
        if not np.all(np.isfinite(rho)):
            raise NonFiniteError(step)
        return rho


def step(state: State, cs: CoefficientSet, path: NoisePath | None, dt: float) -> State:
    """Single step of one state; the path increment used is the one at ``state.time``."""
    grid = state.grid
    stepper = Stepper(grid, cs, dt, path.basis if path is not None else None)
    dW = None
    idx = 0
    if stepper.noisy:
        if path.dt != dt:
            raise ValueError("dt differs from the path's time step")
        idx = steps_of(state.time - path.origin, dt, "state time")
        if not 0 <= idx < path.n_steps:
            raise ValueError("path does not cover [t, t + dt]")
        dW = path.block(idx, idx + 1)[:, 0][None, :]
    rho = stepper.step(state.rho[None], dW, idx)[0]
    return State(grid, rho, state.time + dt)


def _window(s: float, T: float, dt: float, origin: float, n_steps: int | None):
    if T < s:
        raise ValueError("T must be >= s")
    i0 = steps_of(s - origin, dt, "start time")
    i1 = steps_of(T - origin, dt, "end time")
    if i0 < 0:
        raise ValueError("path origin is after the start time")
    if n_steps is not None and i1 > n_steps:
        raise ValueError(f"path covers {n_steps} steps, run needs {i1}")
    return i0, i1


def solve_ensemble(rho0: np.ndarray, s: float, T: float, cs: CoefficientSet, paths, save_every: float | None = None,
                   dt: float | None = None, keep_states: bool = True,
                   chunk: int = ENSEMBLE_CHUNK, probe=None) -> EnsembleTrajectory:
    """Solve a batch of members, member ``b`` driven by ``paths[b]``.

    ``paths`` may be a sequence of :class:`NoisePath` (one per member, shared
    objects allowed for coupled runs) or ``None`` for noiseless problems, in
    which case ``dt`` is required.  ``save_every`` is a time; ``None`` keeps
    only the endpoints.

    ``probe(rho, j) -> dict[str, (B,) array]`` adds caller-defined series
    evaluated at save index ``j`` on each chunk; it must act on members
    independently, or on consecutive pairs when ``chunk`` is even.
    """
    rho0 = np.asarray(rho0, dtype=float)
    grid = grid_of(rho0, batched=True)
    B = rho0.shape[0]
    if np.any(rho0 < 0) or not np.all(np.isfinite(rho0)):
        raise ValueError("initial data must be finite and nonnegative")
    if paths is None:
        if dt is None:
            raise ValueError("dt is required without noise paths")
        paths = [None] * B
        origin, n_avail, basis = 0.0, None, None
    else:
        paths = list(paths)
        if len(paths) != B:
            raise ValueError("one path per ensemble member is required")
        dts = {p.dt for p in paths}
        if len(dts) != 1 or (dt is not None and dt not in dts):
            raise ValueError("all paths must share dt")
        dt = dts.pop()
        origins = {p.origin for p in paths}
        if len(origins) != 1:
            raise ValueError("all paths must share an origin")
        origin = origins.pop()
        n_avail = min(p.n_steps for p in paths)
        basis = paths[0].basis
    i0, i1 = _window(s, T, dt, origin, n_avail)
    stepper = Stepper(grid, cs, dt, basis)
    every = None if save_every is None else steps_of(save_every, dt, "save_every")
    if every is not None and every <= 0:
        raise ValueError("save_every must be positive")
    save_idx = list(range(i0, i1 + 1, every)) if every else [i0]
    if save_idx[-1] != i1:
        save_idx.append(i1)
    n_save = len(save_idx)

    finals, series_parts, state_parts = [], [], []
    for c0 in range(0, B, chunk):
        c1 = min(B, c0 + chunk)
        res = _run_chunk(stepper, rho0[c0:c1], paths[c0:c1], i0, i1, save_idx, keep_states, probe)
        finals.append(res[0])
        series_parts.append(res[1])
        state_parts.append(res[2])
    series = {k: np.concatenate([p[k] for p in series_parts], axis=0) for k in series_parts[0]}
    states = np.concatenate(state_parts, axis=0) if keep_states else None
    times = origin + np.asarray(save_idx, dtype=float) * dt
    return EnsembleTrajectory(grid, times, series, np.concatenate(finals, axis=0), states)


def _run_chunk(stepper: Stepper, rho: np.ndarray, paths, i0, i1, save_idx, keep_states, probe=None):
    grid, cs = stepper.grid, stepper.cs
    B = rho.shape[0]
    n_save = len(save_idx)
    series = {k: np.empty((B, n_save)) for k in SERIES}
    states = np.empty((B, n_save) + grid.shape) if keep_states else None
    save_pos = {idx: j for j, idx in enumerate(save_idx)}

    def record(j, r):
        values = diagnostics(r, cs, grid)
        if probe is not None:
            values.update(probe(r, j))
        for k, v in values.items():
            if k not in series:
                series[k] = np.empty((B, n_save))
            series[k][:, j] = v
        if keep_states:
            states[:, j] = r

    rho = rho.copy()
    record(0, rho)
    n = i0
    while n < i1:
        m = min(i1, n + CHUNK_STEPS)
        dW = None
        if stepper.noisy:
            dW = np.stack([p.block(n, m) for p in paths], axis=0)  # (B, C, m-n)
        for k in range(n, m):
            rho = stepper.step(rho, None if dW is None else dW[:, :, k - n], k)
            j = save_pos.get(k + 1)
            if j is not None:
                record(j, rho)
        n = m
    return rho, series, states


def solve(rho0: np.ndarray, s: float, T: float, cs: CoefficientSet, path: NoisePath | None,
          save_every: float | None = None, dt: float | None = None, keep_states: bool = True) -> Trajectory:
    """Solve one member from time ``s`` to ``T`` using the increments of ``path`` on ``[s, T]``."""
    rho0 = np.asarray(rho0, dtype=float)
    ens = solve_ensemble(rho0[None], s, T, cs, None if path is None else [path], save_every, dt, keep_states)
    return ens.member(0)


def mass_balance_residual(traj: Trajectory, cs: CoefficientSet | None = None) -> np.ndarray:
    """``mass(t) - mass(t0) + int_{t0}^t int f(rho)`` with trapezoidal time quadrature."""
    mass = traj.series["mass"]
    r = traj.series["reaction"]
    dt = np.diff(traj.times)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (r[1:] + r[:-1]))])
    return mass - mass[0] + cum


def gradient_functional(traj: Trajectory | EnsembleTrajectory, p: float = 2.0) -> np.ndarray:
    """``(int |grad_h Phi(rho)|^2 + 1)^(p/2)`` along the save times."""
    if p < 2:
        raise ValueError("p must be >= 2")
    return (traj.series["grad_phi"] + 1.0) ** (p / 2.0)


def default_dt(grid: Grid) -> float:
    return grid.h**2 / 8.0


def default_grid(dim: int) -> Grid:
    return Grid(dim, 128 if dim == 1 else 64)
