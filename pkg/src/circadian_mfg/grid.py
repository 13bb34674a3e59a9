"""Periodic grid, model parameters, and field helpers.

Fields (densities, values, controls) are plain 1-D float arrays of length
``grid.n``; densities are stored as values per radian, so every integral is a
Riemann sum ``sum(f) * grid.dphi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi

#: Frequency of the 24 hour light/dark cycle, radians per hour.
OMEGA_SUN = TWO_PI / 24.0


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform discretization of [0, 2*pi) with cyclic indexing."""

    n: int
    dphi: float

    def phis(self) -> np.ndarray:
        """Grid angles ``j * dphi`` for j = 0..n-1."""
        return np.arange(self.n) * self.dphi


def make_grid(n: int) -> PeriodicGrid:
    if n < 3:
        raise ValueError(f"grid needs at least 3 points, got n={n}")
    return PeriodicGrid(n=int(n), dphi=TWO_PI / n)


def wrap_angle(p: float) -> float:
    """Wrap an angle into [-pi, pi).

    A 12 time-zone trip is the same eastward or westward; wrapping makes the
    two parameterizations identical.
    """
    return (p + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class ModelParams:
    """Model constants: frequencies, noise, cost weights, time-zone angle."""

    omega_s: float = OMEGA_SUN
    omega_0: float = TWO_PI / 24.5
    sigma: float = 0.1
    K: float = 0.01
    F: float = 0.01
    p: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.K < 0 or self.F < 0:
            raise ValueError("cost weights K, F must be nonnegative")
        object.__setattr__(self, "p", wrap_angle(self.p))

    @property
    def drift(self) -> float:
        """Uncontrolled drift omega_0 - omega_s in the rotating frame."""
        return self.omega_0 - self.omega_s

    def with_p(self, p: float) -> "ModelParams":
        return replace(self, p=p)

    def with_p_hours(self, hours: float) -> "ModelParams":
        """Time-zone shift given in hours east (positive) or west (negative)."""
        return replace(self, p=hours * self.omega_s)


#: Reference parameter set used throughout the numerical experiments.
REFERENCE_PARAMS = ModelParams()


def normalize_density(values, grid: PeriodicGrid) -> np.ndarray:
    """Scale ``values`` so that ``sum(values) * dphi == 1``.

    Raises ValueError when the total mass is not positive.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} values, got shape {values.shape}")
    total = values.sum() * grid.dphi
    if not total > 0:
        raise ValueError(f"cannot normalize density with total mass {total}")
    return values / total


def rotate_field(field, r: int) -> np.ndarray:
    """Cyclic rotation by ``r`` grid points: ``out[j] = in[(j - r) mod n]``."""
    return np.roll(np.asarray(field), int(r) % len(field))


def reflect_field(field) -> np.ndarray:
    """Reflection phi -> -phi on the grid: ``out[j] = in[(n - j) mod n]``."""
    field = np.asarray(field)
    return np.roll(field[::-1], 1)


def rotation_steps(grid: PeriodicGrid, p: float) -> int:
    """Grid rotation ``r = n * p / (2*pi)`` for a time-zone angle ``p``.

    Whole time-zone trips need ``r`` integral, which holds whenever ``n`` is a
    multiple of 24 and ``p`` is a whole number of hours times omega_s.
    """
    r = grid.n * p / TWO_PI
    r_int = round(r)
    if abs(r - r_int) > 1e-9:
        raise ValueError(
            f"p={p} does not map to an integer grid rotation (n={grid.n}); "
            "use whole time zones with n a multiple of 24"
        )
    return int(r_int)
