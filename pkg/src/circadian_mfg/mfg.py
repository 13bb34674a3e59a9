"""Finite-horizon re-optimization of the recovery period.

Instead of reusing the stationary control, the population solves a new game
over a horizon T: a value equation runs backward from a zero terminal slice
while the density runs forward from the entrained initial slice, and the two
are iterated to a fixed point by plain substitution. Per-slice l2 distances
(not transport distances) define convergence, since the number of time slices
is large.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

from . import _kernels as kernels
from .ergodic import ErgodicSolution, SolverError
from .grid import ModelParams, PeriodicGrid, rotation_steps, wrap_angle
from .operators import Scheme, cfl_dt, steps_per_interval, sun_cost, interaction_kernel


@dataclass
class MfgPath:
    """Hourly-stored solution of the finite-horizon recovery game."""

    grid: PeriodicGrid
    params: ModelParams
    scheme: Scheme
    p: float
    T: float  # horizon, hours
    dt: float  # stored sampling interval, hours
    step_dt: float  # internal stepping interval, hours
    densities: np.ndarray = field(repr=False)  # (m+1, n)
    values: np.ndarray = field(repr=False)
    controls: np.ndarray = field(repr=False)
    iterations: int = 0
    converged: bool = False
    mass_drift: float = 0.0
    min_entry: float = 0.0

    def times(self) -> np.ndarray:
        return np.arange(self.densities.shape[0]) * self.dt


def solve_recovery_mfg(
    ergodic: ErgodicSolution,
    p: float,
    T_hours: float = 2400.0,
    eps: float = 1e-5,
    max_iter: int = 500,
    scheme: Scheme | None = None,
    a_bound: float = 0.25,
    relaxation: float = 1.0,
    subsample_hours: float = 1.0,
    max_cfl_restarts: int = 8,
) -> MfgPath:
    """Fixed-point iteration over backward value / forward density sweeps.

    Iterate k+1 sweeps the value backward from zero using iterate k's density
    and control at slice i+1, extracts the new per-slice control, and sweeps
    the density forward from the entrained initial slice. Stops when the
    per-slice l2 changes of both the (mass-weighted) densities and controls
    fall below eps. Non-converged results are returned flagged, never raised.

    ``relaxation`` damps the density substitution (1.0 reproduces plain
    substitution). The CFL control bound starts at ``a_bound`` and doubles,
    with a fresh restart, whenever an extracted control exceeds it.
    """
    if ergodic.outcome != "converged":
        raise ValueError(f"stationary input must be converged, got {ergodic.outcome}")
    if T_hours <= 0 or eps <= 0 or max_iter < 1:
        raise ValueError("need positive T and eps, max_iter >= 1")
    if not 0.0 < relaxation <= 1.0:
        raise ValueError("relaxation must lie in (0, 1]")
    grid, params = ergodic.grid, ergodic.params
    scheme = ergodic.scheme if scheme is None else scheme
    rotation_steps(grid, p)  # validate integral rotation for the recovery targets
    p = wrap_angle(p)
    centered = scheme is Scheme.CENTERED
    csun = np.ascontiguousarray(sun_cost(grid, p))
    kernel_t = np.ascontiguousarray(interaction_kernel(grid).T)
    M0 = np.ascontiguousarray(ergodic.mu)
    n = grid.n

    a = a_bound
    for _ in range(max_cfl_restarts):
        dt_max = cfl_dt(grid, params, a)
        per = steps_per_interval(subsample_hours, dt_max)
        step_dt = subsample_hours / per
        n_samples = math.ceil(T_hours / subsample_hours - 1e-12)
        m = n_samples * per

        M_prev = np.empty((m + 1, n))
        M_prev[:] = M0
        beta_prev = np.zeros((m + 1, n))
        U = np.empty((m + 1, n))
        beta_new = np.empty((m + 1, n))
        M_new = np.empty((m + 1, n))
        cbar_prev = np.empty((m + 1, n))
        scratch = np.empty((m + 1, n))
        rowsq = np.empty(m + 1)

        def max_slice_l2(old, new):
            np.subtract(old, new, out=scratch)
            np.einsum("ij,ij->i", scratch, scratch, out=rowsq)
            return math.sqrt(float(rowsq.max()))

        iterations = 0
        converged = False
        violated = False
        drift = 0.0
        min_entry = 0.0
        while iterations < max_iter:
            iterations += 1
            # interaction cost of every previous-iterate slice in one product
            np.matmul(M_prev, kernel_t, out=cbar_prev)
            max_abs_beta = kernels.mfg_backward(
                U, beta_new, cbar_prev, beta_prev, csun,
                params.drift, params.sigma, grid.dphi, step_dt,
                params.K, params.F, centered,
            )
            if max_abs_beta > a:
                violated = True
                break
            drift, min_entry = kernels.mfg_forward(
                M_new, beta_new, M0, params.drift, params.sigma, grid.dphi,
                step_dt, centered,
            )
            d_m = max_slice_l2(M_prev, M_new) * grid.dphi
            d_b = max_slice_l2(beta_prev, beta_new)
            log.debug(
                "iterate %d: max-slice l2 density %.3e, control %.3e", iterations, d_m, d_b
            )
            if relaxation < 1.0:
                M_new *= relaxation
                M_new += (1.0 - relaxation) * M_prev
            M_prev, M_new = M_new, M_prev
            beta_prev, beta_new = beta_new, beta_prev
            if d_m < eps and d_b < eps:
                converged = True
                break
        if violated:
            log.info("control magnitude %.3f exceeded bound %.3f; restarting", max_abs_beta, a)
            a *= 2.0
            continue

        keep = slice(0, m + 1, per)
        return MfgPath(
            grid=grid,
            params=params,
            scheme=scheme,
            p=p,
            T=T_hours,
            dt=subsample_hours,
            step_dt=step_dt,
            densities=np.ascontiguousarray(M_prev[keep]),
            values=np.ascontiguousarray(U[keep]),
            controls=np.ascontiguousarray(beta_prev[keep]),
            iterations=iterations,
            converged=converged,
            mass_drift=float(drift),
            min_entry=float(min_entry),
        )
    raise SolverError(
        f"control bound kept growing past {a} after {max_cfl_restarts} CFL restarts"
    )


@dataclass(frozen=True)
class StationarityReport:
    """Transport distance to the stationary density over the mid-horizon window."""

    max_w2: float
    eps_w: float
    window: tuple[float, float]  # hours

    @property
    def exceeded(self) -> bool:
        return self.max_w2 > self.eps_w


def stationarity_check(
    path: MfgPath, ergodic: ErgodicSolution, eps_w: float = 0.01
) -> StationarityReport:
    """For a p = 0 solve: how far the density drifts from the stationary one
    over t in [T/4, 3T/4]. A stay-at-home population should remain entrained;
    the window maximum exceeding eps_w flags a modeling inconsistency."""
    from .metrics import circular_w2

    if abs(path.p) > 1e-12:
        raise ValueError("stationarity check expects a path solved with p = 0")
    times = path.times()
    lo, hi = path.T / 4.0, 3.0 * path.T / 4.0
    mask = (times >= lo - 1e-9) & (times <= hi + 1e-9)
    w2 = [circular_w2(mu, ergodic.mu, path.grid) for mu in path.densities[mask]]
    return StationarityReport(max_w2=float(max(w2)), eps_w=eps_w, window=(lo, hi))
