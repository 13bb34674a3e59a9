# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Mirrors `pure.py` operation for operation, including the
(left + right) + diagonal grouping that keeps density stepping exactly
reflection-equivariant. See pure.py for the contracts."""

import numpy as np

from libc.math cimport INFINITY, fabs, floor

BACKEND = "compiled"

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_CFL_VIOLATION = 2

cdef int ST_CONVERGED = 0
cdef int ST_MAX_ITER = 1
cdef int ST_CFL = 2


cdef inline void _coeffs_c(double[::1] beta, double w, double sigma, double dphi,
                           bint centered, double[::1] sub, double[::1] diag,
                           double[::1] sup) noexcept nogil:
    cdef Py_ssize_t n = beta.shape[0]
    cdef Py_ssize_t j
    cdef double d = sigma * sigma / (2.0 * dphi * dphi)
    cdef double a, x
    for j in range(n):
        a = w + beta[j]
        if centered:
            x = a / (2.0 * dphi)
            sup[j] = x + d
            sub[j] = -x + d
        else:
            x = a if a > 0.0 else 0.0
            sup[j] = x / dphi + d
            x = a if a < 0.0 else 0.0
            sub[j] = -x / dphi + d
        diag[j] = -(sub[j] + sup[j])


cdef inline void _extract_c(double[::1] u, double w, double dphi, bint centered,
                            double[::1] beta) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t j, jm, jp
    cdef double back, fwd, l, r
    for j in range(n):
        jm = j - 1 if j > 0 else n - 1
        jp = j + 1 if j < n - 1 else 0
        if centered:
            beta[j] = -(u[jp] - u[jm]) / (2.0 * dphi)
        else:
            back = (u[j] - u[jm]) / dphi
            fwd = (u[jp] - u[j]) / dphi
            l = w - back
            r = w - fwd
            if l < 0.0 and r < 0.0:
                beta[j] = -back
            elif l > 0.0 and r > 0.0:
                beta[j] = -fwd
            else:
                beta[j] = 0.0


cdef inline void _fp_step_c(double[::1] m_in, double[::1] m_out, double dt,
                            double[::1] sub, double[::1] diag,
                            double[::1] sup) noexcept nogil:
    cdef Py_ssize_t n = m_in.shape[0]
    cdef Py_ssize_t j, jm, jp
    for j in range(n):
        jm = j - 1 if j > 0 else n - 1
        jp = j + 1 if j < n - 1 else 0
        m_out[j] = m_in[j] + dt * ((sup[jm] * m_in[jm] + sub[jp] * m_in[jp])
                                   + diag[j] * m_in[j])


cdef inline double _shift_cost_c(double[::1] ca, double[::1] cb, double dphi,
                                 Py_ssize_t n, double t) noexcept nogil:
    # quantile-coupling cost with winding shift t; the (q - t)-quantile of b
    # is extended over full turns, Q_b(u + 1) = Q_b(u) + 2*pi
    cdef double u0 = -t
    cdef long k = <long>floor(u0)
    u0 -= k
    cdef Py_ssize_t ib = 0, ia = 0
    while ib < n and cb[ib] <= u0:
        ib += 1
    if ib >= n:
        ib = 0
        k += 1
    cdef double q = 0.0, cost = 0.0, qa, qb, q_next, d
    while q < 1.0:
        qa = ca[ia] if ia < n else INFINITY
        qb = (cb[ib] + k) + t
        q_next = qa if qa < qb else qb
        if 1.0 < q_next:
            q_next = 1.0
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


cdef double _w2_min_sq_c(double[::1] ca, double[::1] cb, double dphi,
                         Py_ssize_t n, double early_threshold_sq) noexcept nogil:
    # convex piecewise-linear in t: ternary search plus candidate shifts
    cdef double best = _shift_cost_c(ca, cb, dphi, n, 0.0)
    cdef double c1 = _shift_cost_c(ca, cb, dphi, n, -1.0)
    if c1 < best:
        best = c1
    c1 = _shift_cost_c(ca, cb, dphi, n, 1.0)
    if c1 < best:
        best = c1
    if early_threshold_sq >= 0.0 and best < early_threshold_sq:
        return best
    cdef double lo = -1.0, hi = 1.0, m1, m2, c2
    cdef int it
    for it in range(120):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        c1 = _shift_cost_c(ca, cb, dphi, n, m1)
        c2 = _shift_cost_c(ca, cb, dphi, n, m2)
        if c1 < best:
            best = c1
        if c2 < best:
            best = c2
        if early_threshold_sq >= 0.0 and best < early_threshold_sq:
            return best
        if c1 <= c2:
            hi = m2
        else:
            lo = m1
        if hi - lo < 1e-15:
            break
    return best


def circular_w2_sq(wa_arr, wb_arr, double dphi, double early_threshold_sq=-1.0):
    cdef double[::1] wa = np.ascontiguousarray(wa_arr, dtype=np.float64)
    cdef double[::1] wb = np.ascontiguousarray(wb_arr, dtype=np.float64)
    cdef Py_ssize_t n = wa.shape[0]
    scratch = np.empty((2, n))
    cdef double[::1] ca = scratch[0]
    cdef double[::1] cb = scratch[1]
    cdef Py_ssize_t i
    cdef double sa = 0.0, sb = 0.0
    for i in range(n):
        sa += wa[i]
        ca[i] = sa
        sb += wb[i]
        cb[i] = sb
    return _w2_min_sq_c(ca, cb, dphi, n, early_threshold_sq)


def apply_operator(u_arr, sub_arr, diag_arr, sup_arr):
    cdef double[::1] u = np.ascontiguousarray(u_arr, dtype=np.float64)
    cdef double[::1] sub = np.ascontiguousarray(sub_arr, dtype=np.float64)
    cdef double[::1] diag = np.ascontiguousarray(diag_arr, dtype=np.float64)
    cdef double[::1] sup = np.ascontiguousarray(sup_arr, dtype=np.float64)
    out_arr = np.empty(u.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t j, jm, jp
    for j in range(n):
        jm = j - 1 if j > 0 else n - 1
        jp = j + 1 if j < n - 1 else 0
        out[j] = (sub[j] * u[jm] + sup[j] * u[jp]) + diag[j] * u[j]
    return out_arr


def apply_transpose(m_arr, sub_arr, diag_arr, sup_arr):
    cdef double[::1] m = np.ascontiguousarray(m_arr, dtype=np.float64)
    cdef double[::1] sub = np.ascontiguousarray(sub_arr, dtype=np.float64)
    cdef double[::1] diag = np.ascontiguousarray(diag_arr, dtype=np.float64)
    cdef double[::1] sup = np.ascontiguousarray(sup_arr, dtype=np.float64)
    out_arr = np.empty(m.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t j, jm, jp
    for j in range(n):
        jm = j - 1 if j > 0 else n - 1
        jp = j + 1 if j < n - 1 else 0
        out[j] = (sup[jm] * m[jm] + sub[jp] * m[jp]) + diag[j] * m[j]
    return out_arr


def extract_control(u_arr, double w, double dphi, bint centered):
    cdef double[::1] u = np.ascontiguousarray(u_arr, dtype=np.float64)
    out_arr = np.empty(u.shape[0])
    cdef double[::1] out = out_arr
    _extract_c(u, w, dphi, centered, out)
    return out_arr


def method2_run(M_arr, U_arr, beta_arr, kernel_arr, csun_arr, double w, double sigma,
                double dphi, double dt, double K, double F, double eps,
                long max_iter, double a_bound, bint centered):
    cdef double[::1] M = M_arr
    cdef double[::1] U = U_arr
    cdef double[::1] beta = beta_arr
    cdef double[:, ::1] C = np.ascontiguousarray(kernel_arr, dtype=np.float64)
    cdef double[::1] csun = np.ascontiguousarray(csun_arr, dtype=np.float64)
    cdef Py_ssize_t n = M.shape[0]

    scratch = np.empty((9, n))
    cdef double[::1] cbar = scratch[0]
    cdef double[::1] sub = scratch[1]
    cdef double[::1] diag = scratch[2]
    cdef double[::1] sup = scratch[3]
    cdef double[::1] u_new = scratch[4]
    cdef double[::1] b_new = scratch[5]
    cdef double[::1] m_new = scratch[6]
    cdef double[::1] ca = scratch[7]
    cdef double[::1] cb = scratch[8]
    cdef double eps_sq = eps * eps
    cdef double sa, sb
    cdef long it = 0
    cdef int status = ST_MAX_ITER
    cdef Py_ssize_t j, k, jm, jp
    cdef double s, lu, db2, diff, maxabs, w2
    cdef bint done

    with nogil:
        while it < max_iter:
            it += 1
            for j in range(n):
                s = 0.0
                for k in range(n):
                    s += C[j, k] * M[k]
                cbar[j] = s
            _coeffs_c(beta, w, sigma, dphi, centered, sub, diag, sup)
            for j in range(n):
                jm = j - 1 if j > 0 else n - 1
                jp = j + 1 if j < n - 1 else 0
                lu = (sub[j] * U[jm] + sup[j] * U[jp]) + diag[j] * U[j]
                u_new[j] = U[j] + dt * (lu + (0.5 * beta[j] * beta[j]
                                              + (K * cbar[j] + F * csun[j])))
            for j in range(n):
                U[j] = u_new[j]
            _extract_c(U, w, dphi, centered, b_new)
            maxabs = 0.0
            for j in range(n):
                if fabs(b_new[j]) > maxabs:
                    maxabs = fabs(b_new[j])
            if maxabs > a_bound:
                for j in range(n):
                    beta[j] = b_new[j]
                status = ST_CFL
                break
            _coeffs_c(b_new, w, sigma, dphi, centered, sub, diag, sup)
            _fp_step_c(M, m_new, dt, sub, diag, sup)
            db2 = 0.0
            for j in range(n):
                diff = b_new[j] - beta[j]
                db2 += diff * diff
            done = False
            if db2 < eps_sq:
                sa = 0.0
                sb = 0.0
                for j in range(n):
                    sa += M[j] * dphi
                    ca[j] = sa
                    sb += m_new[j] * dphi
                    cb[j] = sb
                w2 = _w2_min_sq_c(ca, cb, dphi, n, eps_sq)
                done = w2 < eps_sq
            for j in range(n):
                M[j] = m_new[j]
                beta[j] = b_new[j]
            if done:
                status = ST_CONVERGED
                break
    return it, status


def fp_run(M0_arr, sub_arr, diag_arr, sup_arr, double dt, long n_steps,
           long store_every):
    cdef double[::1] sub = np.ascontiguousarray(sub_arr, dtype=np.float64)
    cdef double[::1] diag = np.ascontiguousarray(diag_arr, dtype=np.float64)
    cdef double[::1] sup = np.ascontiguousarray(sup_arr, dtype=np.float64)
    cdef Py_ssize_t n = sub.shape[0]
    path_arr = np.empty((n_steps // store_every + 1, n))
    cdef double[:, ::1] path = path_arr
    work = np.empty((2, n))
    cdef double[::1] m_cur = work[0]
    cdef double[::1] m_next = work[1]
    cdef double[::1] m0 = np.ascontiguousarray(M0_arr, dtype=np.float64)

    cdef Py_ssize_t j
    cdef long step
    cdef double mass0 = 0.0, mass, drift = 0.0, min_entry, v
    for j in range(n):
        m_cur[j] = m0[j]
        path[0, j] = m0[j]
        mass0 += m0[j]
    min_entry = m_cur[0]
    with nogil:
        for j in range(n):
            if m_cur[j] < min_entry:
                min_entry = m_cur[j]
        for step in range(1, n_steps + 1):
            _fp_step_c(m_cur, m_next, dt, sub, diag, sup)
            mass = 0.0
            for j in range(n):
                v = m_next[j]
                mass += v
                if v < min_entry:
                    min_entry = v
                m_cur[j] = v
            if fabs(mass - mass0) > drift:
                drift = fabs(mass - mass0)
            if step % store_every == 0:
                for j in range(n):
                    path[step // store_every, j] = m_cur[j]
    return path_arr, drift, min_entry


def mfg_backward(U_arr, beta_out_arr, cbar_prev_arr, beta_prev_arr,
                 csun_arr, double w, double sigma, double dphi, double dt,
                 double K, double F, bint centered):
    cdef double[:, ::1] U = U_arr
    cdef double[:, ::1] beta_out = beta_out_arr
    cdef double[:, ::1] cbar = cbar_prev_arr
    cdef double[:, ::1] beta_prev = beta_prev_arr
    cdef double[::1] csun = np.ascontiguousarray(csun_arr, dtype=np.float64)
    cdef Py_ssize_t m = U.shape[0] - 1
    cdef Py_ssize_t n = U.shape[1]
    scratch = np.empty((3, n))
    cdef double[::1] sub = scratch[0]
    cdef double[::1] diag = scratch[1]
    cdef double[::1] sup = scratch[2]
    cdef Py_ssize_t i, j, jm, jp
    cdef double lu, b, max_abs = 0.0
    with nogil:
        for j in range(n):
            U[m, j] = 0.0
            beta_out[m, j] = 0.0
        for i in range(m - 1, -1, -1):
            _coeffs_c(beta_prev[i + 1], w, sigma, dphi, centered, sub, diag, sup)
            for j in range(n):
                jm = j - 1 if j > 0 else n - 1
                jp = j + 1 if j < n - 1 else 0
                b = beta_prev[i + 1, j]
                lu = (sub[j] * U[i + 1, jm] + sup[j] * U[i + 1, jp]) + diag[j] * U[i + 1, j]
                U[i, j] = U[i + 1, j] + dt * (lu + (0.5 * b * b
                                                    + (K * cbar[i + 1, j] + F * csun[j])))
            _extract_c(U[i], w, dphi, centered, beta_out[i])
            for j in range(n):
                if fabs(beta_out[i, j]) > max_abs:
                    max_abs = fabs(beta_out[i, j])
    return max_abs


def mfg_forward(M_out_arr, beta_arr, M0_arr, double w, double sigma, double dphi,
                double dt, bint centered):
    cdef double[:, ::1] M_out = M_out_arr
    cdef double[:, ::1] beta = beta_arr
    cdef double[::1] m0 = np.ascontiguousarray(M0_arr, dtype=np.float64)
    cdef Py_ssize_t m = M_out.shape[0] - 1
    cdef Py_ssize_t n = M_out.shape[1]
    scratch = np.empty((3, n))
    cdef double[::1] sub = scratch[0]
    cdef double[::1] diag = scratch[1]
    cdef double[::1] sup = scratch[2]
    cdef Py_ssize_t i, j
    cdef double mass0 = 0.0, mass, drift = 0.0, min_entry, v
    for j in range(n):
        M_out[0, j] = m0[j]
        mass0 += m0[j]
    min_entry = m0[0]
    with nogil:
        for j in range(n):
            if m0[j] < min_entry:
                min_entry = m0[j]
        for i in range(m):
            _coeffs_c(beta[i], w, sigma, dphi, centered, sub, diag, sup)
            _fp_step_c(M_out[i], M_out[i + 1], dt, sub, diag, sup)
            mass = 0.0
            for j in range(n):
                v = M_out[i + 1, j]
                mass += v
                if v < min_entry:
                    min_entry = v
            if fabs(mass - mass0) > drift:
                drift = fabs(mass - mass0)
    return drift, min_entry
