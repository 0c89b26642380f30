"""Numpy reference kernels: dense dual active-set QP and batched segment-sphere distances.

The QP solver follows the dual active-set method of Goldfarb and Idnani.
It starts from the unconstrained minimizer and adds violated constraints
one at a time, so it needs no phase-1 and detects infeasibility cleanly
(the dual becomes unbounded). The strictly convex Hessian is factored once;
the active-set factorization J = L^-T Q is maintained by Givens rotations.

Problem form, shared by both backends:

    minimize 0.5 x^T G x + g^T x
    subject to C[:, :meq]^T x  = d[:meq]
               C[:, meq:]^T x >= d[meq:]

Columns of C must be nonzero; they are normalized internally so slacks and
tolerances are geometric. Returned multipliers refer to the caller's rows.
"""

import numpy as np

BACKEND = "pure"

STATUS_OPTIMAL = 0
STATUS_INFEASIBLE = 1
STATUS_MAX_ITER = 2

_VIOL_TOL = 1e-10
_REDUNDANT_EQ_TOL = 1e-9


def _upper_inv(U):
    """Invert an upper triangular matrix by back substitution."""
    n = U.shape[0]
    inv = np.zeros((n, n))
    for j in range(n - 1, -1, -1):
        inv[j, j] = 1.0 / U[j, j]
        for i in range(j - 1, -1, -1):
            inv[i, j] = -(U[i, i + 1:j + 1] @ inv[i + 1:j + 1, j]) / U[i, i]
    return inv


def _back_solve(R, y, q):
    """Solve R[:q, :q] r = y[:q] for upper triangular R."""
    r = np.zeros(q)
    for i in range(q - 1, -1, -1):
        r[i] = (y[i] - R[i, i + 1:q] @ r[i + 1:q]) / R[i, i]
    return r


def qp_solve(G, g, C, d, meq, max_iter=1000):
    """Solve the strictly convex QP above.

    Returns (x, f, u, active, iters, status). `u` holds one multiplier per
    constraint (zero where inactive); `active` is the list of active
    constraint indices. On STATUS_INFEASIBLE x is the last dual iterate and
    must not be used as a primal solution.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    n = g.shape[0]
    if C is None or C.size == 0:
        C = np.zeros((n, 0))
        d = np.zeros(0)
    Cw = np.array(C, dtype=np.float64, copy=True)
    dw = np.array(d, dtype=np.float64, copy=True)
    m = Cw.shape[1]

    norms = np.sqrt(np.einsum("ij,ij->j", Cw, Cw)) if m else np.zeros(0)
    if m and norms.min() <= 0.0:
        raise ValueError("zero constraint column")
    if m:
        Cw /= norms
        dw /= norms
    flip = np.ones(m)

    L = np.linalg.cholesky(G)
    J = _upper_inv(L.T)  # J = L^-T, J J^T = G^-1
    x = -J @ (J.T @ g)

    R = np.zeros((n, n))
    iact = np.full(n, -1, dtype=np.intp)
    u = np.zeros(n)
    q = 0
    neq_added = 0
    iters = 0

    def finish(status):
        f = 0.5 * x @ (G @ x) + g @ x
        u_full = np.zeros(m)
        for j in range(q):
            u_full[iact[j]] = u[j] * flip[iact[j]] / norms[iact[j]]
        return x, f, u_full, list(iact[:q]), iters, status

    while True:
        # select the next constraint: pending equalities in order, then the
        # most violated inequality
        if neq_added < meq:
            p = neq_added
            s_p = Cw[:, p] @ x - dw[p]
            if s_p > 0.0:
                Cw[:, p] = -Cw[:, p]
                dw[p] = -dw[p]
                flip[p] = -1.0
                s_p = -s_p
        else:
            p = -1
            s_p = -_VIOL_TOL
            active_mask = np.zeros(m, dtype=bool)
            active_mask[iact[:q]] = True
            for i in range(meq, m):
                if active_mask[i]:
                    continue
                s_i = Cw[:, i] @ x - dw[i]
                if s_i < s_p:
                    p, s_p = i, s_i
            if p < 0:
                return finish(STATUS_OPTIMAL)

        u_p = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                return finish(STATUS_MAX_ITER)

            npv = Cw[:, p]
            dvec = J.T @ npv
            z = J[:, q:] @ dvec[q:]
            r = _back_solve(R, dvec, q) if q else np.zeros(0)

            t1 = np.inf
            k = -1
            for j in range(neq_added, q):  # equalities are never dropped
                if r[j] > 0.0 and u[j] / r[j] < t1:
                    t1 = u[j] / r[j]
                    k = j

            znorm2 = dvec[q:] @ dvec[q:]
            full_possible = znorm2 > 1e-22 * (npv @ npv)
            t2 = -s_p / znorm2 if full_possible else np.inf

            if not full_possible and t1 == np.inf:
                if p < meq and abs(s_p) <= _REDUNDANT_EQ_TOL:
                    neq_added += 1  # redundant but consistent equality
                    break
                return finish(STATUS_INFEASIBLE)

            if t2 <= t1:
                # full step: constraint p becomes active
                x += t2 * z
                u[:q] -= t2 * r
                u_p += t2
                _add_to_factorization(J, R, dvec, q)
                iact[q] = p
                u[q] = u_p
                q += 1
                if p < meq:
                    neq_added += 1
                break

            # blocking constraint k leaves the active set first
            if t1 == np.inf:
                return finish(STATUS_INFEASIBLE)
            if full_possible:
                x += t1 * z
                s_p = npv @ x - dw[p]
            u[:q] -= t1 * r
            u_p += t1
            q = _drop_from_factorization(J, R, iact, u, q, k)


def _add_to_factorization(J, R, dvec, q):
    """Append dvec as column q of R, rotating its tail to a single entry."""
    n = dvec.shape[0]
    for i in range(n - 1, q, -1):
        b = dvec[i]
        if b == 0.0:
            continue
        a = dvec[i - 1]
        rho = np.hypot(a, b)
        c, s = a / rho, b / rho
        dvec[i - 1] = rho
        dvec[i] = 0.0
        col = J[:, i - 1].copy()
        J[:, i - 1] = c * col + s * J[:, i]
        J[:, i] = -s * col + c * J[:, i]
    R[:q + 1, q] = dvec[:q + 1]


def _drop_from_factorization(J, R, iact, u, q, k):
    """Remove active constraint at position k, restoring R to triangular."""
    for j in range(k, q - 1):
        R[:, j] = R[:, j + 1]
        iact[j] = iact[j + 1]
        u[j] = u[j + 1]
    iact[q - 1] = -1
    u[q - 1] = 0.0
    R[:, q - 1] = 0.0
    q -= 1
    for j in range(k, q):
        a, b = R[j, j], R[j + 1, j]
        if b == 0.0:
            continue
        rho = np.hypot(a, b)
        c, s = a / rho, b / rho
        row_hi = R[j, j:q].copy()
        R[j, j:q] = c * row_hi + s * R[j + 1, j:q]
        R[j + 1, j:q] = -s * row_hi + c * R[j + 1, j:q]
        col = J[:, j].copy()
        J[:, j] = c * col + s * J[:, j + 1]
        J[:, j + 1] = -s * col + c * J[:, j + 1]
    return q


def segment_sphere_batch(p0, p1, centers, radii):
    """Closest approach of S segments to O spheres.

    Returns (t, dist): t[s, o] is the clamped segment parameter of the
    closest point, dist[s, o] the distance from that point to the sphere
    surface (negative inside). Degenerate segments use t = 0.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)

    seg = p1 - p0  # (S, 3)
    len2 = np.einsum("ij,ij->i", seg, seg)  # (S,)
    rel = centers[None, :, :] - p0[:, None, :]  # (S, O, 3)
    num = np.einsum("soj,sj->so", rel, seg)  # (S, O)
    safe = np.where(len2 > 0.0, len2, 1.0)
    t = np.clip(num / safe[:, None], 0.0, 1.0)
    t[len2 == 0.0, :] = 0.0
    diff = rel - t[:, :, None] * seg[:, None, :]
    dist = np.sqrt(np.einsum("soj,soj->so", diff, diff)) - radii[None, :]
    return t, dist
