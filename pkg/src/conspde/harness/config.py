"""Experiment configuration: parsing, validation and hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..coefficients import PRESETS, coefficients_from_spec
from ..grid import Grid
from ..noise import build_basis, eval_constants

COMMANDS = ("simulate", "couple", "flowcheck", "ergodicity", "check-assumptions", "selftest")
INITIAL_DATA = ("constant", "cosine", "sine", "bump", "antiphase")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run.

    ``coefficients`` holds preset parameters (``kappa``, ``delta_reg``, ``cap``,
    ``sigma``) or, with ``preset = "custom"``, named building blocks
    (``phi``, ``sigma``, ``f``, ``nu``, ``B``).  ``params`` carries
    command-specific settings; see the README for the keys each command reads.
    """

    command: str = "simulate"
    preset: str = "heat"
    coefficients: dict = field(default_factory=dict)
    dim: int = 1
    n: int = 128
    dt: float | None = None
    T: float = 1.0
    epsilon: float = 0.0
    noise: dict = field(default_factory=lambda: {"mode_cutoff": 4, "amplitude_rule": {"name": "flat", "amplitude": 1.0}})
    seeds: list = field(default_factory=lambda: [0])
    save_every: float | None = None
    initial: dict = field(default_factory=lambda: {"kind": "cosine", "amplitude": 0.5})
    tolerances: dict = field(default_factory=lambda: {"mass": 1e-12, "contraction": 5e-3, "flow": 1e-12})
    params: dict = field(default_factory=dict)
    out: str = "out"
    workers: int = 1

    # -- derived --------------------------------------------------------

    @property
    def grid(self) -> Grid:
        return Grid(self.dim, self.n)

    @property
    def step(self) -> float:
        return self.grid.h**2 / 8.0 if self.dt is None else float(self.dt)

    def basis(self):
        return build_basis(self.dim, int(self.noise.get("mode_cutoff", 4)), self.noise.get("amplitude_rule"))

    def F1(self) -> float:
        return eval_constants(self.basis(), self.grid).F1

    def coefficient_set(self):
        spec = dict(self.coefficients)
        spec["epsilon"] = self.epsilon
        spec["dim"] = self.dim
        if self.preset != "custom":
            spec["preset"] = self.preset
        if self.preset == "dean_kawasaki":
            spec.setdefault("F1", self.F1())
        return coefficients_from_spec(spec)

    def initial_data(self, which: str | dict | None = None) -> np.ndarray:
        spec = self.initial if which is None else which
        if isinstance(spec, str):
            spec = {"kind": spec}
        return make_initial(self.grid, spec)

    # -- serialisation --------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"unknown field {k!r}" for k in unknown])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def manifest_hash(self) -> str:
        """SHA-256 of the canonical manifest; ``out`` and ``workers`` do not affect results and are left out."""
        data = {k: v for k, v in self.to_dict().items() if k not in ("out", "workers")}
        canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    # -- validation -----------------------------------------------------

    def validate(self) -> None:
        """Check every field; raise :class:`ConfigError` listing all problems."""
        p: list[str] = []
        if self.command not in COMMANDS:
            p.append(f"command: {self.command!r} not in {COMMANDS}")
        if self.preset not in PRESETS + ("custom",):
            p.append(f"preset: {self.preset!r} not in {PRESETS + ('custom',)}")
        if self.dim not in (1, 2):
            p.append(f"dim: must be 1 or 2, got {self.dim!r}")
        if not isinstance(self.n, int) or self.n < 4 or self.n % 2:
            p.append(f"n: need an even integer >= 4, got {self.n!r}")
        if self.dt is not None and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            p.append(f"dt: must be positive, got {self.dt!r}")
        if not isinstance(self.T, (int, float)) or self.T < 0:
            p.append(f"T: must be >= 0, got {self.T!r}")
        if not isinstance(self.epsilon, (int, float)) or not 0 <= self.epsilon <= 1:
            p.append(f"epsilon: must lie in [0, 1], got {self.epsilon!r}")
        if not self.seeds or not all(isinstance(s, int) and 0 <= s < 2**64 for s in self.seeds):
            p.append("seeds: need a non-empty list of integers in [0, 2^64)")
        if not isinstance(self.workers, int) or self.workers < 1:
            p.append(f"workers: must be a positive integer, got {self.workers!r}")
        cutoff = self.noise.get("mode_cutoff", 4)
        if not isinstance(cutoff, int) or cutoff < 0:
            p.append(f"noise.mode_cutoff: need a nonnegative integer, got {cutoff!r}")
        elif isinstance(self.n, int) and cutoff >= self.n // 2:
            p.append(f"noise.mode_cutoff: {cutoff} is not resolved on n={self.n} (need < n/2)")
        if self.initial.get("kind") not in INITIAL_DATA:
            p.append(f"initial.kind: {self.initial.get('kind')!r} not in {INITIAL_DATA}")
        if p:
            raise ConfigError(p)

        dt = self.step
        for name, val in [("T", self.T), ("save_every", self.save_every)] + [
                (f"params.{k}", v) for k, v in self.params.items() if k in ALIGNED_PARAMS]:
            for v in (val if isinstance(val, list) else [val]):
                if v is not None and not _aligned(v, dt):
                    p.append(f"{name}: {v!r} is not a multiple of dt={dt!r}")
        try:
            cs = self.coefficient_set()
        except (ValueError, KeyError) as exc:
            p.append(f"coefficients: {exc}")
            raise ConfigError(p)
        h = self.grid.h
        if cs.phi_linear == 0.0:
            rmax = 2.0 * float(np.max(self.initial_data()))
            probe = np.linspace(0.0, rmax, 257)
            dmax = float(np.max(cs.phi.d1(probe)))
            limit = h**2 / (2 * self.dim * dmax)
            if dt > limit:
                p.append(f"dt: {dt!r} violates the explicit diffusion bound h^2/(2 d max Phi') = {limit:.6g}")
        if not cs.f.is_zero and dt * cs.f_lip > 1.0:
            p.append(f"dt: dt * f_lip = {dt * cs.f_lip:g} exceeds 1")
        if p:
            raise ConfigError(p)


ALIGNED_PARAMS = ("s", "s1", "t", "horizons", "burn_in", "stride", "s_grid", "shift")


def _aligned(v, dt) -> bool:
    m = round(float(v) / dt)
    return abs(m * dt - float(v)) <= 1e-9 * max(1.0, abs(float(v)))


def make_initial(grid: Grid, spec: dict) -> np.ndarray:
    """Named smooth initial data with unit mass (before the optional ``mass`` factor)."""
    kind = spec.get("kind", "cosine")
    a = float(spec.get("amplitude", 0.5))
    k = int(spec.get("wavenumber", 1))
    shift = float(spec.get("shift", 0.0))
    mass = float(spec.get("mass", 1.0))
    x = grid.centers
    arg = sum(2 * np.pi * k * (xa - shift) for xa in x)
    if kind == "constant":
        rho = np.ones(grid.shape)
    elif kind == "cosine":
        rho = 1.0 + a * np.cos(arg)
    elif kind == "antiphase":
        rho = 1.0 - a * np.cos(arg)
    elif kind == "sine":
        rho = 1.0 + a * np.sin(arg)
    elif kind == "bump":
        width = float(spec.get("width", 0.1))
        rho = np.full(grid.shape, float(spec.get("floor", 0.2)))
        for sh in np.ndindex(*(3,) * grid.dim):
            r2 = sum((xa - 0.5 - shift - (s - 1)) ** 2 for xa, s in zip(x, sh))
            rho = rho + np.exp(-r2 / (2 * width**2))
    else:
        raise ValueError(f"unknown initial data {kind!r}")
    if np.any(rho < 0):
        raise ValueError("initial data must be nonnegative")
    return mass * rho / float(grid.integrate(rho))


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON or TOML file; ``overrides`` replace top-level fields before validation."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib

        data = tomllib.loads(text.decode())
    else:
        data = json.loads(text)
    data.update(overrides or {})
    return ExperimentConfig.from_dict(data)
