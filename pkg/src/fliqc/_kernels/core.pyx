# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the reference kernels.

Same problem form, tolerances, and return conventions as the numpy
implementation (see pure.py for the method description); the backend
parity tests keep the two in lockstep.
"""

from libc.math cimport INFINITY, fabs, hypot, sqrt

import numpy as np

BACKEND = "compiled"

STATUS_OPTIMAL = 0
STATUS_INFEASIBLE = 1
STATUS_MAX_ITER = 2

cdef double _VIOL_TOL = 1e-10
cdef double _REDUNDANT_EQ_TOL = 1e-9


cdef int _cholesky_lower(double[:, ::1] G, double[:, ::1] L, Py_ssize_t n) except -1:
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(n):
        s = G[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= 0.0:
            raise np.linalg.LinAlgError("matrix is not positive definite")
        L[j, j] = sqrt(s)
        for i in range(j + 1, n):
            s = G[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    return 0


cdef void _upper_inv_from_lower(double[:, ::1] L, double[:, ::1] J, Py_ssize_t n) noexcept:
    # J = L^-T: back substitution on U = L^T, reading U[i, k] as L[k, i]
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(n - 1, -1, -1):
        J[j, j] = 1.0 / L[j, j]
        for i in range(j - 1, -1, -1):
            s = 0.0
            for k in range(i + 1, j + 1):
                s += L[k, i] * J[k, j]
            J[i, j] = -s / L[i, i]


cdef void _back_solve(double[:, ::1] R, double[:] y, double[:] r, Py_ssize_t q) noexcept:
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(q - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, q):
            s -= R[i, k] * r[k]
        r[i] = s / R[i, i]


cdef void _add_to_factorization(double[:, ::1] J, double[:, ::1] R, double[:] dvec,
                                Py_ssize_t q, Py_ssize_t n) noexcept:
    cdef Py_ssize_t i, k
    cdef double a, b, rho, c, s, tmp
    for i in range(n - 1, q, -1):
        b = dvec[i]
        if b == 0.0:
            continue
        a = dvec[i - 1]
        rho = hypot(a, b)
        c = a / rho
        s = b / rho
        dvec[i - 1] = rho
        dvec[i] = 0.0
        for k in range(n):
            tmp = J[k, i - 1]
            J[k, i - 1] = c * tmp + s * J[k, i]
            J[k, i] = -s * tmp + c * J[k, i]
    for i in range(q + 1):
        R[i, q] = dvec[i]


cdef Py_ssize_t _drop_from_factorization(double[:, ::1] J, double[:, ::1] R,
                                         Py_ssize_t[:] iact, double[:] u,
                                         Py_ssize_t q, Py_ssize_t k,
                                         Py_ssize_t n) noexcept:
    cdef Py_ssize_t i, j
    cdef double a, b, rho, c, s, tmp
    for j in range(k, q - 1):
        for i in range(n):
            R[i, j] = R[i, j + 1]
        iact[j] = iact[j + 1]
        u[j] = u[j + 1]
    iact[q - 1] = -1
    u[q - 1] = 0.0
    for i in range(n):
        R[i, q - 1] = 0.0
    q -= 1
    for j in range(k, q):
        a = R[j, j]
        b = R[j + 1, j]
        if b == 0.0:
            continue
        rho = hypot(a, b)
        c = a / rho
        s = b / rho
        for i in range(j, q):
            tmp = R[j, i]
            R[j, i] = c * tmp + s * R[j + 1, i]
            R[j + 1, i] = -s * tmp + c * R[j + 1, i]
        for i in range(n):
            tmp = J[i, j]
            J[i, j] = c * tmp + s * J[i, j + 1]
            J[i, j + 1] = -s * tmp + c * J[i, j + 1]
    return q


def qp_solve(G, g, C, d, int meq, int max_iter=1000):
    """Same contract as the reference qp_solve."""
    Ga = np.ascontiguousarray(G, dtype=np.float64)
    ga = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = ga.shape[0]
    if C is None or C.size == 0:
        C = np.zeros((n, 0))
        d = np.zeros(0)
    Cw_arr = np.array(C, dtype=np.float64, copy=True, order="C")
    dw_arr = np.array(d, dtype=np.float64, copy=True)
    cdef Py_ssize_t m = Cw_arr.shape[1]

    norms_arr = np.sqrt(np.einsum("ij,ij->j", Cw_arr, Cw_arr)) if m else np.zeros(0)
    if m and norms_arr.min() <= 0.0:
        raise ValueError("zero constraint column")
    if m:
        Cw_arr /= norms_arr
        dw_arr /= norms_arr
    flip_arr = np.ones(m)

    L_arr = np.zeros((n, n))
    J_arr = np.zeros((n, n))
    R_arr = np.zeros((n, n))
    x_arr = np.zeros(n)
    iact_arr = np.full(n, -1, dtype=np.intp)
    u_arr = np.zeros(n)

    cdef double[:, ::1] Gv = Ga
    cdef double[:] gv = ga
    cdef double[:, ::1] Cw = Cw_arr
    cdef double[:] dw = dw_arr
    cdef double[:] flip = flip_arr
    cdef double[:, ::1] Lv = L_arr
    cdef double[:, ::1] J = J_arr
    cdef double[:, ::1] R = R_arr
    cdef double[:] x = x_arr
    cdef Py_ssize_t[:] iact = iact_arr
    cdef double[:] u = u_arr

    cdef double[:] npv = np.zeros(n)
    cdef double[:] dvec = np.zeros(n)
    cdef double[:] z = np.zeros(n)
    cdef double[:] r = np.zeros(n)
    cdef double[:] tmpv = np.zeros(n)
    cdef unsigned char[:] mask = np.zeros(m, dtype=np.uint8)

    cdef Py_ssize_t q = 0, neq_added = 0, p = 0, i, j, k, kdrop
    cdef int iters = 0, status = -1
    cdef double s, s_p, s_i, u_p, t1, t2, znorm2, npv2, f
    cdef bint done = False, full_possible

    _cholesky_lower(Gv, Lv, n)
    _upper_inv_from_lower(Lv, J, n)
    # x = -J J^T g
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += J[k, i] * gv[k]
        tmpv[i] = s
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += J[i, j] * tmpv[j]
        x[i] = -s

    while not done:
        # select the next constraint: pending equalities in order, then the
        # most violated inequality
        if neq_added < meq:
            p = neq_added
            s_p = -dw[p]
            for i in range(n):
                s_p += Cw[i, p] * x[i]
            if s_p > 0.0:
                for i in range(n):
                    Cw[i, p] = -Cw[i, p]
                dw[p] = -dw[p]
                flip[p] = -1.0
                s_p = -s_p
        else:
            for i in range(m):
                mask[i] = 0
            for j in range(q):
                mask[iact[j]] = 1
            p = -1
            s_p = -_VIOL_TOL
            for i in range(meq, m):
                if mask[i]:
                    continue
                s_i = -dw[i]
                for k in range(n):
                    s_i += Cw[k, i] * x[k]
                if s_i < s_p:
                    p = i
                    s_p = s_i
            if p < 0:
                status = STATUS_OPTIMAL
                break

        u_p = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                status = STATUS_MAX_ITER
                done = True
                break

            for i in range(n):
                npv[i] = Cw[i, p]
            for i in range(n):
                s = 0.0
                for k in range(n):
                    s += J[k, i] * npv[k]
                dvec[i] = s
            for i in range(n):
                s = 0.0
                for j in range(q, n):
                    s += J[i, j] * dvec[j]
                z[i] = s
            if q:
                _back_solve(R, dvec, r, q)

            t1 = INFINITY
            kdrop = -1
            for j in range(neq_added, q):  # equalities are never dropped
                if r[j] > 0.0 and u[j] / r[j] < t1:
                    t1 = u[j] / r[j]
                    kdrop = j

            znorm2 = 0.0
            for j in range(q, n):
                znorm2 += dvec[j] * dvec[j]
            npv2 = 0.0
            for i in range(n):
                npv2 += npv[i] * npv[i]
            full_possible = znorm2 > 1e-22 * npv2
            t2 = -s_p / znorm2 if full_possible else INFINITY

            if not full_possible and t1 == INFINITY:
                if p < meq and fabs(s_p) <= _REDUNDANT_EQ_TOL:
                    neq_added += 1  # redundant but consistent equality
                    break
                status = STATUS_INFEASIBLE
                done = True
                break

            if t2 <= t1:
                # full step: constraint p becomes active
                for i in range(n):
                    x[i] += t2 * z[i]
                for j in range(q):
                    u[j] -= t2 * r[j]
                u_p += t2
                _add_to_factorization(J, R, dvec, q, n)
                iact[q] = p
                u[q] = u_p
                q += 1
                if p < meq:
                    neq_added += 1
                break

            # blocking constraint kdrop leaves the active set first
            if t1 == INFINITY:
                status = STATUS_INFEASIBLE
                done = True
                break
            if full_possible:
                for i in range(n):
                    x[i] += t1 * z[i]
                s_p = -dw[p]
                for i in range(n):
                    s_p += npv[i] * x[i]
            for j in range(q):
                u[j] -= t1 * r[j]
            u_p += t1
            q = _drop_from_factorization(J, R, iact, u, q, kdrop, n)

    f = 0.0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += Gv[i, j] * x[j]
        f += (0.5 * s + gv[i]) * x[i]
    u_full = np.zeros(m)
    cdef double[:] uf = u_full
    for j in range(q):
        uf[iact[j]] = u[j] * flip[iact[j]] / norms_arr[iact[j]]
    active = [int(iact[j]) for j in range(q)]
    return x_arr, float(f), u_full, active, iters, status


def segment_sphere_batch(p0, p1, centers, radii):
    """Same contract as the reference segment_sphere_batch."""
    p0a = np.ascontiguousarray(p0, dtype=np.float64)
    p1a = np.ascontiguousarray(p1, dtype=np.float64)
    ca = np.ascontiguousarray(centers, dtype=np.float64)
    ra = np.ascontiguousarray(radii, dtype=np.float64)

    cdef double[:, ::1] P0 = p0a
    cdef double[:, ::1] P1 = p1a
    cdef double[:, ::1] Cn = ca
    cdef double[:] Rd = ra
    cdef Py_ssize_t S = P0.shape[0], O = Cn.shape[0]

    t_arr = np.empty((S, O))
    d_arr = np.empty((S, O))
    cdef double[:, ::1] T = t_arr
    cdef double[:, ::1] D = d_arr

    cdef Py_ssize_t si, oi
    cdef double sx, sy, sz, len2, rx, ry, rz, num, tt, dx, dy, dz
    for si in range(S):
        sx = P1[si, 0] - P0[si, 0]
        sy = P1[si, 1] - P0[si, 1]
        sz = P1[si, 2] - P0[si, 2]
        len2 = sx * sx + sy * sy + sz * sz
        for oi in range(O):
            rx = Cn[oi, 0] - P0[si, 0]
            ry = Cn[oi, 1] - P0[si, 1]
            rz = Cn[oi, 2] - P0[si, 2]
            if len2 > 0.0:
                num = rx * sx + ry * sy + rz * sz
                tt = num / len2
                if tt < 0.0:
                    tt = 0.0
                elif tt > 1.0:
                    tt = 1.0
            else:
                tt = 0.0
            dx = rx - tt * sx
            dy = ry - tt * sy
            dz = rz - tt * sz
            T[si, oi] = tt
            D[si, oi] = sqrt(dx * dx + dy * dy + dz * dz) - Rd[oi]
    return t_arr, d_arr
