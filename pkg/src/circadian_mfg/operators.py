"""Discrete transport-diffusion operator, cost kernels, control extraction.

The operator L acts on a value vector U as

    (L U)_j = a_j^+ (U_{j+1}-U_j)/dphi + a_j^- (U_j-U_{j-1})/dphi
              + (sigma^2/2) (U_{j+1}-2U_j+U_{j-1})/dphi^2        (monotone)

    (L U)_j = a_j (U_{j+1}-U_{j-1})/(2 dphi)
              + (sigma^2/2) (U_{j+1}-2U_j+U_{j-1})/dphi^2        (centered)

with a_j = omega_0 - omega_s + beta_j, x^+ = max(x,0), x^- = min(x,0).
Rows sum to zero by construction (the diagonal is the exact float negation of
the off-diagonal sum), so the transpose conserves mass and, for the monotone
variant under the CFL step bound, explicit density steps stay nonnegative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import ModelParams, PeriodicGrid


class Scheme(enum.Enum):
    MONOTONE = "monotone"
    CENTERED = "centered"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}; use 'monotone' or 'centered'") from None


def sun_cost(grid: PeriodicGrid, p: float) -> np.ndarray:
    """Alignment cost with the light/dark cycle: ``0.5 sin^2((p - phi)/2)``."""
    return 0.5 * np.sin((p - grid.phis()) / 2.0) ** 2


def interaction_kernel(grid: PeriodicGrid) -> np.ndarray:
    """Matrix C with ``C[j,k] = 0.5 sin^2((k-j) dphi / 2) * dphi``.

    The mutual-synchronization cost of a density M is then the direct O(n^2)
    sum ``C @ M``.
    """
    j = np.arange(grid.n)
    diff = (j[None, :] - j[:, None]) * grid.dphi
    return 0.5 * np.sin(diff / 2.0) ** 2 * grid.dphi


def interaction_cost(grid: PeriodicGrid, mu, kernel: np.ndarray | None = None) -> np.ndarray:
    """Average misalignment with the population, ``c̄_j = sum_k 0.5 sin^2((k-j)dphi/2) M_k dphi``."""
    if kernel is None:
        kernel = interaction_kernel(grid)
    return kernel @ np.asarray(mu, dtype=float)


def transport_coefficients(grid: PeriodicGrid, params: ModelParams, beta, scheme: Scheme):
    """Per-row band coefficients (sub, diag, sup) of the operator L.

    sub_j multiplies U_{j-1}, sup_j multiplies U_{j+1} in row j. The diagonal
    is defined as -(sub + sup) so that rows sum to zero exactly in floating
    point.
    """
    a = params.drift + np.asarray(beta, dtype=float)
    dphi = grid.dphi
    d = params.sigma**2 / (2.0 * dphi * dphi)
    if scheme is Scheme.MONOTONE:
        ap = np.maximum(a, 0.0)
        am = np.minimum(a, 0.0)
        sup = ap / dphi + d
        sub = -am / dphi + d
    else:
        x = a / (2.0 * dphi)
        sup = x + d
        sub = -x + d
    diag = -(sub + sup)
    return sub, diag, sup


@dataclass(frozen=True)
class TransportOperator:
    """Cyclic-band operator L: per-row coefficients plus the dense form.

    ``apply``/``apply_transpose`` go through the banded kernels, whose
    (left + right) + diagonal grouping cancels the row exactly on constant
    input; the dense ``matrix`` serves the direct linear solves.
    """

    matrix: np.ndarray
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    scheme: Scheme
    beta: np.ndarray

    def apply(self, u) -> np.ndarray:
        from . import _kernels

        return _kernels.apply_operator(np.asarray(u, dtype=float), self.sub, self.diag, self.sup)

    def apply_transpose(self, m) -> np.ndarray:
        from . import _kernels

        return _kernels.apply_transpose(np.asarray(m, dtype=float), self.sub, self.diag, self.sup)


def build_transport_operator(
    grid: PeriodicGrid, params: ModelParams, beta, scheme: Scheme
) -> TransportOperator:
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise ValueError("control field must be finite")
    sub, diag, sup = transport_coefficients(grid, params, beta, scheme)
    n = grid.n
    mat = np.zeros((n, n))
    idx = np.arange(n)
    mat[idx, idx] = diag
    mat[idx, (idx + 1) % n] = sup
    mat[idx, (idx - 1) % n] = sub
    return TransportOperator(matrix=mat, sub=sub, diag=diag, sup=sup, scheme=scheme, beta=beta)


def extract_control(U, grid: PeriodicGrid, params: ModelParams, scheme: Scheme) -> np.ndarray:
    """Control approximating -dV/dphi, stencil chosen to preserve upwinding.

    Monotone: with l_j = w - (U_j-U_{j-1})/dphi and r_j = w - (U_{j+1}-U_j)/dphi
    (w the uncontrolled drift), the backward difference is used when both are
    negative, the forward difference when both are positive, else beta_j = 0.
    Centered: symmetric difference, matching the centered stencil of L.
    """
    U = np.asarray(U, dtype=float)
    dphi = grid.dphi
    fwd = (np.roll(U, -1) - U) / dphi
    back = (U - np.roll(U, 1)) / dphi
    if scheme is Scheme.CENTERED:
        return -(np.roll(U, -1) - np.roll(U, 1)) / (2.0 * dphi)
    w = params.drift
    l = w - back
    r = w - fwd
    beta = np.zeros(grid.n)
    both_neg = (l < 0) & (r < 0)
    both_pos = (l > 0) & (r > 0)
    beta[both_neg] = -back[both_neg]
    beta[both_pos] = -fwd[both_pos]
    return beta


def cfl_dt(grid: PeriodicGrid, params: ModelParams, a_bound: float) -> float:
    """Largest stable explicit step for a control bounded by ``a_bound``."""
    if a_bound < 0:
        raise ValueError("control bound must be nonnegative")
    dphi = grid.dphi
    return 1.0 / (
        2.0
        * (
            params.sigma**2 / dphi**2
            + (abs(params.omega_s - params.omega_0) + a_bound) / dphi
        )
    )


def steps_per_interval(interval_hours: float, dt_max: float) -> int:
    """Number of equal substeps covering ``interval_hours`` with dt <= dt_max."""
    return max(1, math.ceil(interval_hours / dt_max - 1e-12))
