"""Finite-volume and spectral simulation of conservative SPDEs on the torus, with pathwise and ergodic checks."""

from .coefficients import CoefficientSet, coefficients_from_spec, preset, strat_to_ito, verify_assumptions
from .grid import Grid
from .noise import NoiseBasis, NoisePath, build_basis, eval_constants, sample_path, shift_path
from .solver import State, Trajectory, solve, solve_ensemble, step

__all__ = [
    "CoefficientSet", "Grid", "NoiseBasis", "NoisePath", "State", "Trajectory", "build_basis",
    "coefficients_from_spec", "eval_constants", "preset", "sample_path", "shift_path", "solve",
    "solve_ensemble", "step", "strat_to_ito", "verify_assumptions",
]
