"""NumPy implementation of the hot kernels.

This is the fallback backend; `_core.pyx` implements the same functions in
Cython. Both keep the same per-element floating-point expression trees:

  * operator rows are applied as (left + right) + diagonal, which makes
    density stepping exactly equivariant under the grid reflection
    phi -> -phi (the left/right terms swap, addition commutes exactly);
  * the diagonal coefficient is the exact negation of (sub + sup), so
    applying the operator to a constant vector gives exact zeros.

Status codes returned by the iterative kernels:
  0 converged, 1 hit max_iter, 2 control exceeded the CFL bound.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_CFL_VIOLATION = 2


def _coeffs(a, sigma, dphi, centered):
    d = sigma * sigma / (2.0 * dphi * dphi)
    if centered:
        x = a / (2.0 * dphi)
        sup = x + d
        sub = -x + d
    else:
        sup = np.maximum(a, 0.0) / dphi + d
        sub = -np.minimum(a, 0.0) / dphi + d
    diag = -(sub + sup)
    return sub, diag, sup


def apply_operator(u, sub, diag, sup):
    """(L u)_j = (sub_j u_{j-1} + sup_j u_{j+1}) + diag_j u_j."""
    return (sub * np.roll(u, 1) + sup * np.roll(u, -1)) + diag * u


def apply_transpose(m, sub, diag, sup):
    """(L^T m)_j = (sup_{j-1} m_{j-1} + sub_{j+1} m_{j+1}) + diag_j m_j."""
    return (np.roll(sup * m, 1) + np.roll(sub * m, -1)) + diag * m


def extract_control(u, w, dphi, centered):
    u = np.asarray(u, dtype=float)
    if centered:
        return -(np.roll(u, -1) - np.roll(u, 1)) / (2.0 * dphi)
    back = (u - np.roll(u, 1)) / dphi
    fwd = (np.roll(u, -1) - u) / dphi
    l = w - back
    r = w - fwd
    beta = np.zeros_like(u)
    mask = (l < 0.0) & (r < 0.0)
    beta[mask] = -back[mask]
    mask = (l > 0.0) & (r > 0.0)
    beta[mask] = -fwd[mask]
    return beta


def _shifted_coupling_cost(ca, cb, dphi, n, t):
    """Quantile-coupling cost between circle measures with winding shift ``t``.

    ca, cb are the cumulative weights (ca[n-1] == cb[n-1] == total mass 1) of
    atoms sitting at positions i*dphi. The q-quantile of the first measure is
    paired with the (q - t)-quantile of the second, the latter extended by
    full turns: Q_b(u + 1) = Q_b(u) + 2*pi. ``t`` is the (signed) mass
    transported through the cut at angle 0.
    """
    # locate the b-interval containing u = -t, with winding k
    u0 = -t
    k = math.floor(u0)
    u0 -= k
    ib = int(np.searchsorted(cb, u0, side="right"))
    if ib >= n:  # u0 landed on the total mass due to rounding
        ib = 0
        k += 1
        u0 -= 1.0
    ia = 0
    q = 0.0
    cost = 0.0
    while q < 1.0:
        qa = ca[ia] if ia < n else np.inf
        qb = (cb[ib] + k) + t
        q_next = min(qa, qb, 1.0)
        if q_next > q:
            d = (ia - ib - k * n) * dphi
            cost += (q_next - q) * d * d
            q = q_next
        if qa <= q_next and ia < n:
            ia += 1
        if qb <= q_next:
            ib += 1
            if ib == n:
                ib = 0
                k += 1
    return cost


def circular_w2_sq(wa, wb, dphi, early_threshold_sq=-1.0):
    """Squared circular W2 between grid measures (weights summing to 1).

    The coupling cost is convex and piecewise linear in the winding shift t
    (the net mass crossing the cut), so the exact minimum over t in [-1, 1]
    is found by ternary search plus the t = 0 and boundary candidates. If
    ``early_threshold_sq`` is nonnegative, any evaluated coupling below it is
    returned immediately (each evaluation is a feasible coupling, hence an
    upper bound for the minimum).
    """
    wa = np.asarray(wa, dtype=float)
    wb = np.asarray(wb, dtype=float)
    n = len(wa)
    ca = np.cumsum(wa)
    cb = np.cumsum(wb)

    def cost(t):
        return _shifted_coupling_cost(ca, cb, dphi, n, t)

    best = min(cost(0.0), cost(-1.0), cost(1.0))
    if 0.0 <= early_threshold_sq and best < early_threshold_sq:
        return best
    lo, hi = -1.0, 1.0
    for _ in range(120):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        c1 = cost(m1)
        c2 = cost(m2)
        c_lo = min(c1, c2)
        if c_lo < best:
            best = c_lo
            if 0.0 <= early_threshold_sq and best < early_threshold_sq:
                return best
        if c1 <= c2:
            hi = m2
        else:
            lo = m1
        if hi - lo < 1e-15:
            break
    return best


def method2_run(M, U, beta, kernel_c, csun, w, sigma, dphi, dt, K, F, eps, max_iter, a_bound, centered):
    """Artificial-time iteration for the stationary game; updates in place.

    Per iteration: explicit value update, control extraction, explicit
    density update; stops when both the W2 between successive densities and
    the l2 between successive controls drop below eps.
    """
    eps_sq = eps * eps
    Mv = M
    Uv = U
    bv = beta
    it = 0
    status = STATUS_MAX_ITER
    while it < max_iter:
        it += 1
        cbar = kernel_c @ Mv
        a = w + bv
        sub, diag, sup = _coeffs(a, sigma, dphi, centered)
        lu = apply_operator(Uv, sub, diag, sup)
        Uv = Uv + dt * (lu + (0.5 * bv * bv + (K * cbar + F * csun)))
        b_new = extract_control(Uv, w, dphi, centered)
        if np.max(np.abs(b_new)) > a_bound:
            bv = b_new
            status = STATUS_CFL_VIOLATION
            break
        sub, diag, sup = _coeffs(w + b_new, sigma, dphi, centered)
        M_new = Mv + dt * apply_transpose(Mv, sub, diag, sup)
        done = False
        db = b_new - bv
        if db @ db < eps_sq:
            w2 = circular_w2_sq(Mv * dphi, M_new * dphi, dphi, eps_sq)
            done = w2 < eps_sq
        Mv = M_new
        bv = b_new
        if done:
            status = STATUS_CONVERGED
            break
    M[:] = Mv
    U[:] = Uv
    beta[:] = bv
    return it, status


def fp_run(M0, sub, diag, sup, dt, n_steps, store_every):
    """Explicit density evolution under a fixed control; stores every
    ``store_every`` steps (slice 0 included).

    Returns (path, mass_drift, min_entry) where mass_drift is the largest
    deviation of the per-step total mass from the initial one (in units of
    sum(M), i.e. already comparable across grids) and min_entry the smallest
    density value seen at any step.
    """
    n_stored = n_steps // store_every
    path = np.empty((n_stored + 1, len(M0)))
    M = np.array(M0, dtype=float)
    path[0] = M
    mass0 = M.sum()
    drift = 0.0
    min_entry = float(M.min())
    for step in range(1, n_steps + 1):
        M = M + dt * apply_transpose(M, sub, diag, sup)
        drift = max(drift, abs(M.sum() - mass0))
        m = float(M.min())
        if m < min_entry:
            min_entry = m
        if step % store_every == 0:
            path[step // store_every] = M
    return path, drift, min_entry


def mfg_backward(U, beta_out, cbar_prev, beta_prev, csun, w, sigma, dphi, dt, K, F, centered):
    """Backward value sweep from the zero terminal slice, controls extracted
    per slice on the way down. Operator and running cost use the previous
    iterate's control and interaction cost (``cbar_prev``, precomputed from
    the previous densities) at slice i+1. Returns max |beta_out|.
    """
    m = U.shape[0] - 1
    U[m] = 0.0
    beta_out[m] = 0.0
    max_abs = 0.0
    for i in range(m - 1, -1, -1):
        b = beta_prev[i + 1]
        sub, diag, sup = _coeffs(w + b, sigma, dphi, centered)
        lu = apply_operator(U[i + 1], sub, diag, sup)
        U[i] = U[i + 1] + dt * (lu + (0.5 * b * b + (K * cbar_prev[i + 1] + F * csun)))
        bi = extract_control(U[i], w, dphi, centered)
        beta_out[i] = bi
        ma = np.max(np.abs(bi))
        if ma > max_abs:
            max_abs = float(ma)
    return max_abs


def mfg_forward(M_out, beta, M0, w, sigma, dphi, dt, centered):
    """Forward density sweep under the per-slice controls."""
    m = M_out.shape[0] - 1
    M_out[0] = M0
    mass0 = M0.sum()
    drift = 0.0
    min_entry = float(M0.min())
    for i in range(m):
        sub, diag, sup = _coeffs(w + beta[i], sigma, dphi, centered)
        M_out[i + 1] = M_out[i] + dt * apply_transpose(M_out[i], sub, diag, sup)
        drift = max(drift, abs(M_out[i + 1].sum() - mass0))
        mn = float(M_out[i + 1].min())
        if mn < min_entry:
            min_entry = mn
    return drift, min_entry
