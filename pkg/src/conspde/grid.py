"""Periodic cell grid on the unit torus."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of ``n`` cells per axis on ``[0, 1)^dim``.

    Cell ``i`` covers ``[i h, (i + 1) h)`` and has centre ``(i + 1/2) h``.
    The face between cell ``i`` and cell ``i + 1`` along an axis sits at
    ``(i + 1) h``.
    """

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 2:
            raise ValueError(f"need at least 2 cells per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @cached_property
    def centers_1d(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def centers(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of cell centres, ``indexing='ij'``."""
        axes = [self.centers_1d] * self.dim
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_points(self, axis: int) -> tuple[np.ndarray, ...]:
        """Coordinates of the ``+`` faces normal to ``axis``."""
        pts = list(self.centers)
        pts[axis] = pts[axis] + 0.5 * self.h
        return tuple(pts)

    def integrate(self, field: np.ndarray) -> np.ndarray:
        """Cell quadrature over the trailing ``dim`` axes."""
        axes = tuple(range(-self.dim, 0))
        return self.cell_volume * np.sum(field, axis=axes)

    def l1(self, field: np.ndarray) -> np.ndarray:
        return self.integrate(np.abs(field))

    def sample(self, func) -> np.ndarray:
        """Point values of ``func(*coords)`` at cell centres."""
        return np.asarray(func(*self.centers), dtype=float) * np.ones(self.shape)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer FFT wavenumbers per axis, broadcast to ``shape``."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        grids = np.meshgrid(*([k] * self.dim), indexing="ij")
        return tuple(grids)
