"""Analytic reference solutions built from even pi-periodic Mathieu functions.

With no mutual-interaction cost (K = 0) and the intrinsic frequency equal to
the sun frequency, the exponential transform W = exp(-V/sigma^2) linearizes
the stationary value equation: W(phi) = f(phi/2) where f solves

    f'' + [a - 2 q cos(2x)] f = 0,      q = -F / sigma^4,

f is the lowest even pi-periodic eigenfunction (nodeless, hence W > 0), and
the stationary triple is

    dV/dphi   = -sigma^2 d/dphi log W,
    mu        = W^2 / integral(W^2),
    lambda    = F/4 + (sigma^4/8) * C(q),

with C(q) the characteristic value (the smallest eigenvalue of the cosine-
coefficient recurrence). Small-K corrections to this solution follow from a
first-order expansion in K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .grid import PeriodicGrid
from .operators import interaction_cost


def _recurrence_smallest(q: float, size: int, want_vector: bool):
    # Even pi-periodic cosine coefficients A_{2k} satisfy a three-term
    # recurrence; rescaling A_0 by sqrt(2) makes it a symmetric tridiagonal
    # eigenproblem: diag 4k^2, off-diagonal [sqrt(2) q, q, q, ...].
    diag = 4.0 * np.arange(size, dtype=float) ** 2
    off = np.full(size - 1, q, dtype=float)
    off[0] = math.sqrt(2.0) * q
    if want_vector:
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
        return vals[0], vecs[:, 0]
    vals = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)
    return vals[0], None


def _converged_size(q: float, tol: float = 1e-10, max_size: int = 65536) -> int:
    size = max(16, int(2.0 * math.sqrt(abs(q)) + 16))
    a_prev, _ = _recurrence_smallest(q, size, False)
    while size < max_size:
        size *= 2
        a, _ = _recurrence_smallest(q, size, False)
        if abs(a - a_prev) < tol:
            return size
        a_prev = a
    raise RuntimeError(
        f"characteristic value did not stabilize for q={q} (truncation reached N={size})"
    )


def mathieu_char_value(q: float) -> float:
    """Characteristic value of the lowest even pi-periodic Mathieu function."""
    size = _converged_size(q)
    a, _ = _recurrence_smallest(q, size, False)
    return float(a)


@dataclass(frozen=True)
class MathieuEven:
    """Lowest even pi-periodic Mathieu function as a cosine series.

    coeffs[k] is the coefficient of cos(2 k x); the series is normalized so
    the function equals 1 at x = 0.
    """

    q: float
    a: float
    coeffs: np.ndarray


def mathieu_even(q: float) -> MathieuEven:
    size = _converged_size(q)
    a, vec = _recurrence_smallest(q, size, True)
    coeffs = vec.copy()
    coeffs[0] /= math.sqrt(2.0)
    coeffs /= coeffs.sum()  # value 1 at x = 0
    return MathieuEven(q=float(q), a=float(a), coeffs=coeffs)


def mathieu_eval(m: MathieuEven, x) -> np.ndarray | float:
    """Evaluate the cosine series sum_k A_{2k} cos(2 k x)."""
    x = np.asarray(x, dtype=float)
    k2 = 2.0 * np.arange(len(m.coeffs))
    vals = np.cos(np.multiply.outer(x, k2)) @ m.coeffs
    return vals if vals.ndim else float(vals)


@dataclass(frozen=True)
class SpecialCaseSolution:
    """Stationary solution of the decoupled problem sampled on a grid."""

    F: float
    sigma: float
    mu_K0: np.ndarray
    dV_K0: np.ndarray
    lambda_K0: float
    W_K0: np.ndarray
    mathieu: MathieuEven


def special_case_solution(F: float, sigma: float, grid: PeriodicGrid) -> SpecialCaseSolution:
    if F < 0:
        raise ValueError("F must be nonnegative")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    q = -F / sigma**4
    m = mathieu_even(q)
    phis = grid.phis()
    # In the phi variable the series reads W(phi) = sum_k A_{2k} cos(k phi);
    # derivatives are taken on the series, not by differencing samples.
    k = np.arange(len(m.coeffs), dtype=float)
    W = np.cos(np.multiply.outer(phis, k)) @ m.coeffs
    dW = -np.sin(np.multiply.outer(phis, k)) @ (k * m.coeffs)
    mu = W**2
    mu = mu / (mu.sum() * grid.dphi)
    dV = -sigma**2 * dW / W
    lam = F / 4.0 + sigma**4 / 8.0 * m.a
    return SpecialCaseSolution(
        F=float(F),
        sigma=float(sigma),
        mu_K0=mu,
        dV_K0=dV,
        lambda_K0=float(lam),
        W_K0=W,
        mathieu=m,
    )


@dataclass(frozen=True)
class FirstOrderCost:
    """Candidate normalizations of the first-order average-cost correction.

    ``density_weighted`` is the solvability value, the one that keeps the
    first-order value correction periodic; ``unweighted`` drops the density
    weight from the integral and is reported alongside for comparison.
    """

    unweighted: float
    density_weighted: float


def perturbation_lambda1(mu_K0: np.ndarray, grid: PeriodicGrid) -> FirstOrderCost:
    cbar = interaction_cost(grid, mu_K0)
    return FirstOrderCost(
        unweighted=float(cbar.sum() * grid.dphi),
        density_weighted=float((cbar * mu_K0).sum() * grid.dphi),
    )


def _cumtrapz(values: np.ndarray, dphi: float) -> np.ndarray:
    out = np.empty_like(values)
    out[0] = 0.0
    np.cumsum(0.5 * (values[1:] + values[:-1]) * dphi, out=out[1:])
    return out


def perturbation_dV1(sol: SpecialCaseSolution, lambda1: float, grid: PeriodicGrid) -> np.ndarray:
    """First-order correction to dV/dphi via the integrating-factor formula,

        dV1(phi) = 2 / (sigma^2 mu0(phi)) * [c + int_0^phi mu0 (lambda1 - cbar)],

    with c fixed so the correction integrates to zero over the circle
    (periodicity of the first-order value).
    """
    mu0 = sol.mu_K0
    if mu0.min() < 1e-12:
        raise ValueError("density too close to zero for the integrating-factor formula")
    cbar = interaction_cost(grid, mu0)
    integral = _cumtrapz(mu0 * (lambda1 - cbar), grid.dphi)
    inv_mu = 1.0 / mu0
    c = -(integral * inv_mu).sum() / inv_mu.sum()
    return 2.0 / sol.sigma**2 * (c + integral) * inv_mu


def perturbation_mu1(sol: SpecialCaseSolution, lambda1: float, grid: PeriodicGrid) -> np.ndarray:
    """First-order density correction mu1 = Gamma * W.

    Gamma solves the periodic linear problem

        (sigma^2/2) (Gamma W'' - W Gamma'') = (2/sigma^2) mu0 (lambda1 - cbar)

    discretized with periodic second differences for Gamma'' and the exact
    W'' = -(a - 2q cos phi) W / 4 from the Mathieu equation. Unlike the
    integrating-factor route, nothing is divided by the (possibly tiny)
    density here. The system is singular along Gamma ~ W (mu1 ~ W^2); the
    minimum-norm solution is taken and the leftover component is fixed by
    giving mu1 zero total mass.
    """
    mu0, W, sigma = sol.mu_K0, sol.W_K0, sol.sigma
    n, dphi = grid.n, grid.dphi
    cbar = interaction_cost(grid, mu0)
    rhs = 2.0 / sigma**2 * mu0 * (lambda1 - cbar)
    m = sol.mathieu
    wpp = -(m.a - 2.0 * m.q * np.cos(grid.phis())) * W / 4.0
    idx = np.arange(n)
    d2 = np.zeros((n, n))
    d2[idx, idx] = -2.0 / dphi**2
    d2[idx, (idx + 1) % n] = 1.0 / dphi**2
    d2[idx, (idx - 1) % n] = 1.0 / dphi**2
    op = sigma**2 / 2.0 * (np.diag(wpp) - W[:, None] * d2)
    gamma, *_ = np.linalg.lstsq(op, rhs, rcond=None)
    mu1 = gamma * W
    w2 = W**2
    mu1 = mu1 - (mu1.sum() / w2.sum()) * w2
    return mu1
