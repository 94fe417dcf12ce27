"""Spatially stationary conservative noise on the torus.

The noise is a finite trigonometric sum

    W(t, x) = sum_j lambda_j e_j(x) B^j_t,

with ``e_j`` one of ``sqrt(2) sin(2 pi k.x)`` / ``sqrt(2) cos(2 pi k.x)`` for
every wavevector ``|k|_inf <= K``.  In two dimensions each mode drives one
independent Brownian motion per coordinate direction, so the flux noise is
vector valued.  Brownian increments come from counter-based substreams keyed
by ``(seed, mode identity, component, block index)``, which makes any stretch
of the two-sided path addressable without generating what precedes it.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .grid import Grid

BLOCK = 4096
TWO_PI = 2.0 * np.pi
_HEADER = struct.Struct("<IIdQQQ")
_FORMAT_VERSION = 1

SIN, COS = "sin", "cos"


@dataclass(frozen=True)
class Mode:
    k: tuple[int, ...]
    amplitude: float
    phase: str


@dataclass(frozen=True)
class NoiseBasis:
    """Trigonometric noise basis.

    ``amplitude_rule`` is one of ``{"name": "flat", "amplitude": a}`` or
    ``{"name": "power_law", "gamma": g, "amplitude": a, "zero_mode": a0}``.
    """

    dim: int
    mode_cutoff: int
    modes: tuple[Mode, ...]
    amplitude_rule: dict = field(hash=False, compare=True)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def n_channels(self) -> int:
        return self.n_modes * self.dim

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([m.amplitude for m in self.modes])

    @property
    def wavevectors(self) -> np.ndarray:
        return np.array([m.k for m in self.modes], dtype=float).reshape(self.n_modes, self.dim)

    def evaluate(self, points: tuple[np.ndarray, ...]) -> np.ndarray:
        """``e_j`` at the given points, shape ``(n_modes, *points_shape)``."""
        arg = self._phase_arg(points)
        is_sin = np.array([m.phase == SIN for m in self.modes])
        is_sin = is_sin.reshape((-1,) + (1,) * points[0].ndim)
        return np.sqrt(2.0) * np.where(is_sin, np.sin(arg), np.cos(arg))

    def gradient(self, points: tuple[np.ndarray, ...]) -> np.ndarray:
        """``grad e_j``, shape ``(n_modes, dim, *points_shape)``."""
        arg = self._phase_arg(points)
        is_sin = np.array([m.phase == SIN for m in self.modes])
        is_sin = is_sin.reshape((-1,) + (1,) * points[0].ndim)
        dphase = np.sqrt(2.0) * np.where(is_sin, np.cos(arg), -np.sin(arg))
        kvec = TWO_PI * self.wavevectors
        kvec = kvec.reshape(kvec.shape + (1,) * points[0].ndim)
        return kvec * dphase[:, None]

    def hessian_sup(self) -> np.ndarray:
        """``sup_x |D^2 e_j(x)|`` (Frobenius norm) in closed form."""
        knorm2 = np.sum(self.wavevectors**2, axis=1)
        return np.sqrt(2.0) * TWO_PI**2 * knorm2

    def _phase_arg(self, points):
        kvec = self.wavevectors
        arg = np.zeros((self.n_modes,) + points[0].shape)
        for a in range(self.dim):
            arg += TWO_PI * kvec[:, a].reshape((-1,) + (1,) * points[0].ndim) * points[a]
        return arg

    def channel_fields(self, points: tuple[np.ndarray, ...], axis: int) -> np.ndarray:
        """``lambda_j e_j`` placed on the channels feeding flux component ``axis``.

        Returns shape ``(n_channels, *points_shape)``; channels driving other
        components are zero.
        """
        vals = self.amplitudes.reshape((-1,) + (1,) * points[0].ndim) * self.evaluate(points)
        out = np.zeros((self.n_modes, self.dim) + points[0].shape)
        out[:, axis] = vals
        return out.reshape((self.n_channels,) + points[0].shape)

    def to_json(self) -> dict:
        return {"dim": self.dim, "mode_cutoff": self.mode_cutoff, "amplitude_rule": dict(self.amplitude_rule)}

    @classmethod
    def from_json(cls, data: dict) -> "NoiseBasis":
        return build_basis(data["dim"], data["mode_cutoff"], data["amplitude_rule"])


def _amplitude(k: tuple[int, ...], rule: dict) -> float:
    name = rule.get("name", "flat")
    amp = float(rule.get("amplitude", 1.0))
    if name == "flat":
        return amp
    if name == "power_law":
        norm = math.sqrt(sum(c * c for c in k))
        if norm == 0:
            return float(rule.get("zero_mode", 0.0))
        return amp * norm ** (-float(rule["gamma"]))
    raise ValueError(f"unknown amplitude rule {name!r}")


def build_basis(dim: int, mode_cutoff: int, amplitude_rule: dict | None = None) -> NoiseBasis:
    """Enumerate all ``|k|_inf <= mode_cutoff`` in lexicographic order, sin before cos."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if mode_cutoff < 0:
        raise ValueError("mode_cutoff must be nonnegative")
    rule = dict(amplitude_rule or {"name": "flat", "amplitude": 1.0})
    modes = []
    for k in itertools.product(range(-mode_cutoff, mode_cutoff + 1), repeat=dim):
        lam = _amplitude(k, rule)
        if not np.isfinite(lam) or lam < 0:
            raise ValueError(f"amplitude for k={k} is {lam}; need finite and >= 0")
        modes.append(Mode(k, lam, SIN))
        modes.append(Mode(k, lam, COS))
    basis = NoiseBasis(dim, mode_cutoff, tuple(modes), rule)
    f3 = float(np.sum(basis.amplitudes**2 * np.sum((TWO_PI * basis.wavevectors) ** 2, axis=1)))
    if not np.isfinite(f3):
        raise ValueError("amplitude rule gives non-finite F3")
    return basis


@dataclass(frozen=True)
class NoiseConstants:
    F1: float
    F3: float
    F4: float
    stationarity_deviation: float
    gradient_deviation: float


def eval_constants(basis: NoiseBasis, grid: Grid, tol: float = 1e-10) -> NoiseConstants:
    """Quadratic variation constants of the noise, measured on ``grid``.

    ``F1`` is the observed value of ``sum_j lambda_j^2 e_j(x)^2`` (with both
    members of each sin/cos pair this equals ``2 sum_k lambda_k^2``).  A basis
    whose field varies in ``x`` beyond ``tol`` is reported, not rejected.
    """
    pts = grid.centers
    lam2 = (basis.amplitudes**2).reshape((-1,) + (1,) * grid.dim)
    f1_field = np.sum(lam2 * basis.evaluate(pts) ** 2, axis=0)
    grad = basis.gradient(pts)
    f3_field = np.sum(lam2 * np.sum(grad**2, axis=1), axis=0)
    f4 = float(np.sum(basis.amplitudes**2 * basis.hessian_sup() ** 2))

    def rel_dev(fld):
        mean = float(np.mean(fld))
        if mean == 0.0:
            return float(np.max(np.abs(fld)))
        return float((np.max(fld) - np.min(fld)) / abs(mean))

    return NoiseConstants(
        F1=float(np.mean(f1_field)),
        F3=float(np.mean(f3_field)),
        F4=f4,
        stationarity_deviation=rel_dev(f1_field),
        gradient_deviation=rel_dev(f3_field),
    )


def _zigzag(i: int) -> int:
    return 2 * i if i >= 0 else -2 * i - 1


def _channel_key(basis: NoiseBasis, channel: int) -> tuple[int, ...]:
    mode = basis.modes[channel // basis.dim]
    comp = channel % basis.dim
    return (basis.dim, comp, 0 if mode.phase == SIN else 1) + tuple(_zigzag(c) for c in mode.k)


@lru_cache(maxsize=4096)
def _normal_block(seed: int, key: tuple[int, ...], block: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key + (_zigzag(block),))
    out = np.random.Generator(np.random.Philox(ss)).standard_normal(BLOCK)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class NoisePath:
    """One realisation of the driving Brownian motions on a uniform time grid.

    Increment ``n`` (``0 <= n``) covers ``[origin + n dt, origin + (n+1) dt)``
    and is drawn from absolute stream index ``offset + n``.  ``stored`` holds
    explicitly materialised increments for the first ``n_steps`` indices;
    anything past them is regenerated from the seed.
    """

    basis: NoiseBasis
    dt: float
    n_steps: int
    seed: int
    origin: float = 0.0
    offset: int = 0
    stored: np.ndarray | None = None

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def block(self, start: int, stop: int) -> np.ndarray:
        """Increments for steps ``start..stop-1``, shape ``(n_channels, stop-start)``."""
        if stop < start:
            raise ValueError("stop < start")
        out = np.empty((self.basis.n_channels, stop - start))
        lo = start
        if self.stored is not None and start < self.n_steps:
            hi = min(stop, self.n_steps)
            out[:, : hi - start] = self.stored[:, start:hi]
            lo = hi
        if lo < stop:
            out[:, lo - start :] = self._generate(lo + self.offset, stop + self.offset)
        return out

    def _generate(self, a: int, b: int) -> np.ndarray:
        scale = math.sqrt(self.dt)
        out = np.empty((self.basis.n_channels, b - a))
        b0, b1 = a // BLOCK, (b - 1) // BLOCK
        for c in range(self.basis.n_channels):
            key = _channel_key(self.basis, c)
            parts = [_normal_block(self.seed, key, blk) for blk in range(b0, b1 + 1)]
            seq = np.concatenate(parts) if len(parts) > 1 else parts[0]
            out[c] = seq[a - b0 * BLOCK : b - b0 * BLOCK]
        out *= scale
        return out

    @property
    def increments(self) -> np.ndarray:
        """All increments over the horizon, ``(n_channels, n_steps)``."""
        if self.stored is not None:
            return self.stored
        return self.block(0, self.n_steps)

    def mode_increments(self) -> np.ndarray:
        """Increments as ``(n_modes, dim, n_steps)``."""
        return self.increments.reshape(self.basis.n_modes, self.basis.dim, -1)

    def wiener(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Partial sums ``W(n dt) - W(start dt)`` for ``n = start..stop``."""
        stop = self.n_steps if stop is None else stop
        inc = self.block(start, stop)
        return np.concatenate([np.zeros((inc.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)

    def materialize(self) -> "NoisePath":
        return NoisePath(self.basis, self.dt, self.n_steps, self.seed, self.origin, self.offset,
                         np.ascontiguousarray(self.increments))


def sample_path(basis: NoiseBasis, dt: float, horizon: float, seed: int, origin: float = 0.0) -> NoisePath:
    """Path with ``ceil(horizon / dt)`` increments per channel."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if horizon < dt * (1 - 1e-12):
        raise ValueError("horizon must be at least one step")
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must fit in 64 unsigned bits")
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    return NoisePath(basis, float(dt), n_steps, int(seed), float(origin))


def derive_seed(seed0: int, *index: int) -> int:
    """Independent 64-bit seed for substream ``index`` of a master seed."""
    state = np.random.SeedSequence(entropy=int(seed0), spawn_key=tuple(int(i) for i in index)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def steps_of(s: float, dt: float, what: str = "time") -> int:
    """Convert an aligned time to a step count, rejecting misaligned input."""
    m = round(s / dt)
    if abs(m * dt - s) > 1e-9 * max(1.0, abs(s)):
        raise ValueError(f"{what} {s!r} is not a multiple of dt={dt!r}")
    return int(m)


def shift_path(path: NoisePath, s: float) -> NoisePath:
    """Wiener shift: the returned path's increment ``n`` is the original's ``n + s/dt``."""
    m = steps_of(s, path.dt, "shift")
    if m == 0:
        return path
    stored = None
    if path.stored is not None and 0 <= m < path.n_steps:
        stored = path.stored[:, m:]
    return NoisePath(path.basis, path.dt, max(path.n_steps - m, 0), path.seed, 0.0,
                     path.offset + m, stored)


def save_path(path: NoisePath, filename: str | Path) -> None:
    """Binary increments plus a JSON sidecar (``<file>.json``)."""
    filename = Path(filename)
    inc = np.ascontiguousarray(path.mode_increments(), dtype="<f8")
    header = _HEADER.pack(path.basis.dim, path.basis.mode_cutoff, path.dt, path.n_steps,
                          path.basis.n_modes, path.seed)
    with open(filename, "wb") as fh:
        fh.write(header)
        fh.write(inc.tobytes(order="C"))
    sidecar = {
        "format_version": _FORMAT_VERSION,
        "basis": path.basis.to_json(),
        "origin": path.origin,
        "offset": path.offset,
    }
    Path(str(filename) + ".json").write_text(json.dumps(sidecar, indent=2))


def load_path(filename: str | Path) -> NoisePath:
    filename = Path(filename)
    sidecar = json.loads(Path(str(filename) + ".json").read_text())
    raw = filename.read_bytes()
    dim, cutoff, dt, n_steps, n_modes, seed = _HEADER.unpack_from(raw, 0)
    basis = NoiseBasis.from_json(sidecar["basis"])
    if basis.dim != dim or basis.mode_cutoff != cutoff or basis.n_modes != n_modes:
        raise ValueError("path header disagrees with its sidecar")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != n_modes * dim * n_steps:
        raise ValueError("truncated path file")
    stored = data.reshape(n_modes * dim, n_steps).astype(float)
    return NoisePath(basis, dt, n_steps, seed, sidecar["origin"], sidecar["offset"], stored)
