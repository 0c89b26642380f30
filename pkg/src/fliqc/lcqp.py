"""QPs with linear complementarity constraints, solved by penalty homotopy.

The problem family:

    minimize   0.5 y^T Q y + g^T y
    subject to A y >= b           (rows in eq_rows hold with equality)
               lb <= y <= ub
               0 <= L y + l_const  perp  R y + r_const >= 0

The complementarity sides may carry constant offsets (l_const, r_const); with
both zero this is the plain bilinear form y^T L^T R y. The solver relaxes the
orthogonality, then drives it to zero by minimizing a sequence of convex QPs
whose linear term carries the penalty gradient rho * (L^T (R y + r_const) +
R^T (L y + l_const)), growing rho geometrically whenever the iteration stalls
with residual complementarity. Every iterate lies in the relaxed feasible
set, so stopping early (budget, max penalty) still yields a usable point.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import FliqcError, NonConvexError, ScenarioValidationError


class QPStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


class LCQPStatus(str, Enum):
    OPTIMAL = "Optimal"
    MAX_PENALTY = "MaxPenaltyReached"
    TIME_BUDGET = "TimeBudget"
    INFEASIBLE_LINEAR = "InfeasibleLinear"


@dataclass(frozen=True)
class LCQProblem:
    """See the module docstring for the problem form. A rows are b <= A y."""

    Q: np.ndarray
    g: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None
    eq_rows: tuple = ()
    L: np.ndarray = None
    R: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None
    l_const: np.ndarray = None
    r_const: np.ndarray = None

    def __post_init__(self):
        n = self.g.shape[0]
        if self.Q.shape != (n, n):
            raise ScenarioValidationError("Q", f"expected {n}x{n}")
        if np.max(np.abs(self.Q - self.Q.T)) > 1e-10:
            raise ScenarioValidationError("Q", "Q must be symmetric within 1e-10")
        if np.linalg.eigvalsh(self.Q).min() <= 0:
            raise NonConvexError("Q must be positive definite")
        object.__setattr__(self, "eq_rows", tuple(int(i) for i in self.eq_rows))
        if self.A is None or self.A.size == 0:
            object.__setattr__(self, "A", np.zeros((0, n)))
            object.__setattr__(self, "b", np.zeros(0))
        if self.b is None:
            raise ScenarioValidationError("b", "A given without b")
        if self.A.shape[1] != n or self.b.shape[0] != self.A.shape[0]:
            raise ScenarioValidationError("A", "A/b dimensions inconsistent with g")
        if any(not 0 <= i < self.A.shape[0] for i in self.eq_rows):
            raise ScenarioValidationError("eq_rows", "row index out of range")
        if self.L is None or self.L.size == 0:
            object.__setattr__(self, "L", np.zeros((0, n)))
            object.__setattr__(self, "R", np.zeros((0, n)))
        if self.R is None or self.R.shape != self.L.shape or self.L.shape[1] != n:
            raise ScenarioValidationError("L", "L/R must both be n_c x n_y")
        nc = self.L.shape[0]
        if self.l_const is None:
            object.__setattr__(self, "l_const", np.zeros(nc))
        if self.r_const is None:
            object.__setattr__(self, "r_const", np.zeros(nc))
        if self.l_const.shape != (nc,) or self.r_const.shape != (nc,):
            raise ScenarioValidationError("l_const", "constant offsets must have length n_c")

    @property
    def n_y(self):
        return self.g.shape[0]

    @property
    def n_c(self):
        return self.L.shape[0]

    def objective(self, y):
        return float(0.5 * y @ (self.Q @ y) + self.g @ y)

    def phi(self, y):
        """Complementarity residual: (L y + l)^T (R y + r)."""
        if self.n_c == 0:
            return 0.0
        return float((self.L @ y + self.l_const) @ (self.R @ y + self.r_const))


@dataclass(frozen=True)
class SolverOptions:
    rho0: float = 0.01
    beta: float = 2.0
    comp_tol: float = 1e-8
    stat_tol: float = 1e-8
    max_outer: int = 40
    max_inner: int = 1000
    time_budget: float = None
    warm_start: np.ndarray = None

    def __post_init__(self):
        if self.rho0 <= 0:
            raise ScenarioValidationError("rho0", "rho0 must be > 0")
        if self.beta <= 1:
            raise ScenarioValidationError("beta", "beta must be > 1")
        if self.comp_tol <= 0 or self.stat_tol <= 0:
            raise ScenarioValidationError("comp_tol", "tolerances must be > 0")


@dataclass(frozen=True)
class SolveResult:
    y: np.ndarray
    status: LCQPStatus
    phi: float
    rho_final: float
    outer_iters: int
    inner_iters: int
    wall_time: float
    rho_trace: tuple = ()


# ---------------------------------------------------------------------------
# convex QP front end

def _to_kernel_form(n, A, b, eq_rows, lb, ub):
    """Convert <=-sense rows plus bounds to the kernel's >=-column form.

    Returns (C, d, n_eq), or None when a degenerate all-zero row is already
    contradictory. Bounds with lb == ub become equality columns.
    """
    eq_set = set(int(i) for i in eq_rows)
    cols = []
    rhs = []
    n_eq = 0

    def add_eq(c, val):
        nonlocal n_eq
        cols.insert(n_eq, c)
        rhs.insert(n_eq, val)
        n_eq += 1

    if A is not None and len(A):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        for i in range(A.shape[0]):
            row = A[i]
            if np.linalg.norm(row) < 1e-14:
                ok = abs(b[i]) <= 1e-12 if i in eq_set else b[i] >= -1e-12
                if not ok:
                    return None
                continue
            if i in eq_set:
                add_eq(row.copy(), float(b[i]))
            else:
                cols.append(-row)  # A y <= b  ->  -row . y >= -b
                rhs.append(float(-b[i]))
    lb_arr = np.asarray(lb, dtype=float) if lb is not None else np.full(n, -np.inf)
    ub_arr = np.asarray(ub, dtype=float) if ub is not None else np.full(n, np.inf)
    for i in range(n):
        if np.isfinite(lb_arr[i]) and lb_arr[i] == ub_arr[i]:
            e = np.zeros(n)
            e[i] = 1.0
            add_eq(e, float(lb_arr[i]))
            continue
        if np.isfinite(lb_arr[i]):
            e = np.zeros(n)
            e[i] = 1.0
            cols.append(e)
            rhs.append(float(lb_arr[i]))
        if np.isfinite(ub_arr[i]):
            e = np.zeros(n)
            e[i] = -1.0
            cols.append(e)
            rhs.append(float(-ub_arr[i]))
    C = np.array(cols).T if cols else np.zeros((n, 0))
    return C, np.array(rhs), n_eq


def _kernel_solve(H, g, form, max_iter):
    try:
        y, f, u, active, iters, code = _kernels.qp_solve(
            np.asarray(H, dtype=float), np.asarray(g, dtype=float),
            form[0], form[1], form[2], max_iter=max_iter,
        )
    except np.linalg.LinAlgError as exc:
        raise NonConvexError(f"Hessian is not positive definite: {exc}") from None
    if code == _kernels.STATUS_OPTIMAL:
        return y, QPStatus.OPTIMAL
    if code == _kernels.STATUS_INFEASIBLE:
        return y, QPStatus.INFEASIBLE
    return y, QPStatus.MAX_ITER


def solve_qp(H, g, A=None, b=None, eq_rows=(), lb=None, ub=None, warm_start=None, max_iter=1000):
    """KKT point of a convex QP with rows A y <= b (eq_rows hold as A y = b).

    Note the row sense: this front end takes <= rows, while LCQProblem stores
    >= rows. Bounds with lb == ub become equalities. warm_start is accepted
    for interface compatibility; the dual active-set engine cannot use one.
    Returns (y, QPStatus); infeasibility is a status, not an exception.
    """
    del warm_start
    g = np.asarray(g, dtype=float)
    form = _to_kernel_form(g.shape[0], A, b, eq_rows, lb, ub)
    if form is None:
        return np.zeros(g.shape[0]), QPStatus.INFEASIBLE
    return _kernel_solve(H, g, form, max_iter)


# ---------------------------------------------------------------------------
# penalty homotopy

def _relaxed_constraints(p):
    """All non-complementarity constraints of the LCQP in <= row form."""
    blocks = []
    rhs = []
    eq = []
    row = 0
    for i in range(p.A.shape[0]):
        if i in p.eq_rows:
            blocks.append(p.A[i])
            rhs.append(p.b[i])
            eq.append(row)
        else:
            blocks.append(-p.A[i])  # b <= A y  ->  -A y <= -b
            rhs.append(-p.b[i])
        row += 1
    if p.n_c:
        for i in range(p.n_c):
            blocks.append(-p.L[i])  # L y + l >= 0
            rhs.append(p.l_const[i])
            row += 1
        for i in range(p.n_c):
            blocks.append(-p.R[i])  # R y + r >= 0
            rhs.append(p.r_const[i])
            row += 1
    if not blocks:
        return None, None, ()
    return np.array(blocks), np.array(rhs), tuple(eq)


def _is_relaxed_feasible(p, y, tol=1e-8):
    if p.A.shape[0]:
        res = p.A @ y - p.b
        for i in range(p.A.shape[0]):
            if i in p.eq_rows:
                if abs(res[i]) > tol:
                    return False
            elif res[i] < -tol:
                return False
    if p.lb is not None and np.any(y < p.lb - tol):
        return False
    if p.ub is not None and np.any(y > p.ub + tol):
        return False
    if p.n_c:
        if (p.L @ y + p.l_const).min() < -tol or (p.R @ y + p.r_const).min() < -tol:
            return False
    return True


def _solve_pinned(p, sides, A_sub, b_sub, eq_sub, max_iter):
    """Solve the branch QP with one side of each pair pinned to zero."""
    rows = []
    rhs = []
    for i, side in enumerate(sides):
        if side == "L":
            rows.append(p.L[i])
            rhs.append(-p.l_const[i])
        else:
            rows.append(p.R[i])
            rhs.append(-p.r_const[i])
    base_rows = A_sub if A_sub is not None else np.zeros((0, p.n_y))
    base_rhs = b_sub if b_sub is not None else np.zeros(0)
    A_all = np.vstack([base_rows, np.array(rows)])
    b_all = np.concatenate([base_rhs, np.array(rhs)])
    eq_all = tuple(eq_sub) + tuple(range(len(base_rhs), len(b_all)))
    y, st = solve_qp(p.Q, p.g, A_all, b_all, eq_all, p.lb, p.ub, max_iter=max_iter)
    return y if st == QPStatus.OPTIMAL else None


_ENUM_POLISH_LIMIT = 12


def _polish_ladder(p, y, A_sub, b_sub, eq_sub, max_iter, deep):
    """Exact branch re-solve around the iterate y.

    First pins the smaller side of each pair (the branch the iterate leans
    toward). When that branch is inconsistent and `deep` is set, single-pair
    flips are tried, then full branch enumeration for small pair counts. Any
    returned point satisfies the orthogonality exactly.
    """
    ly = p.L @ y + p.l_const
    ry = p.R @ y + p.r_const
    base = tuple("L" if ly[i] <= ry[i] else "R" for i in range(p.n_c))
    y0 = _solve_pinned(p, base, A_sub, b_sub, eq_sub, max_iter)
    if y0 is not None or not deep:
        return y0
    best = None
    for i in range(p.n_c):
        alt = base[:i] + (("R" if base[i] == "L" else "L"),) + base[i + 1:]
        cand = _solve_pinned(p, alt, A_sub, b_sub, eq_sub, max_iter)
        if cand is not None and (best is None or p.objective(cand) < p.objective(best)):
            best = cand
    if best is not None or p.n_c > _ENUM_POLISH_LIMIT:
        return best
    return _best_branch(p, A_sub, b_sub, eq_sub, max_iter)


def _best_branch(p, A_sub, b_sub, eq_sub, max_iter):
    """Exact optimum over all 2^n_c branches; None when every branch fails."""
    best = None
    for mask in range(1 << p.n_c):
        sides = tuple("L" if mask & (1 << i) else "R" for i in range(p.n_c))
        cand = _solve_pinned(p, sides, A_sub, b_sub, eq_sub, max_iter)
        if cand is not None and (best is None or p.objective(cand) < p.objective(best)):
            best = cand
    return best


def solve_lcqp(problem, opts=None):
    """Penalty-homotopy solve; see the module docstring for the algorithm.

    Statuses: Optimal (complementarity residual <= comp_tol), MaxPenaltyReached
    / TimeBudget (feasible but residual complementarity), InfeasibleLinear
    (the relaxed constraints themselves admit no point; returned y is zeros
    and must not be used).
    """
    p = problem
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    A_sub, b_sub, eq_sub = _relaxed_constraints(p)
    form = _to_kernel_form(p.n_y, A_sub, b_sub, eq_sub, p.lb, p.ub)
    inner = 0

    def out_of_time():
        return opts.time_budget is not None and time.perf_counter() - t0 > opts.time_budget

    def result(y, status, rho_final, outer, trace):
        return SolveResult(
            y=y, status=status, phi=p.phi(y), rho_final=rho_final,
            outer_iters=outer, inner_iters=inner,
            wall_time=time.perf_counter() - t0, rho_trace=tuple(trace),
        )

    if form is None:
        return result(np.zeros(p.n_y), LCQPStatus.INFEASIBLE_LINEAR, 0.0, 0, ())
    y, st = _kernel_solve(p.Q, p.g, form, opts.max_inner)
    inner += 1
    if st == QPStatus.INFEASIBLE:
        return result(np.zeros(p.n_y), LCQPStatus.INFEASIBLE_LINEAR, 0.0, 0, ())
    if st == QPStatus.MAX_ITER:
        raise FliqcError("inner QP budget exhausted before reaching a feasible point")

    def finalize(y, status, rho_final, outer, trace):
        # exact branch re-solve: keeps the relaxed constraints satisfied and
        # zeroes the complementarity residual whenever a branch is consistent
        nonlocal inner
        if p.n_c and not out_of_time():
            if status == LCQPStatus.OPTIMAL:
                obj_y = p.objective(y)
                adopt_tol = 1e-9 * (1.0 + abs(obj_y))
                y_pol = _polish_ladder(p, y, A_sub, b_sub, eq_sub, opts.max_inner, deep=False)
                inner += 1
                if (
                    y_pol is not None
                    and p.phi(y_pol) <= opts.comp_tol
                    and p.objective(y_pol) <= obj_y + adopt_tol
                ):
                    y = y_pol
                elif p.n_c <= _ENUM_POLISH_LIMIT:
                    # the iterate only meets the residual tolerance off-branch,
                    # or the greedy pin picked a bad side: settle it exactly so
                    # tolerance slack cannot undercut the true branch optimum
                    y_enum = _best_branch(p, A_sub, b_sub, eq_sub, opts.max_inner)
                    inner += 1
                    if y_enum is not None:
                        y = y_enum
            else:
                deep = status == LCQPStatus.MAX_PENALTY
                y_pol = _polish_ladder(p, y, A_sub, b_sub, eq_sub, opts.max_inner, deep)
                inner += 1
                if y_pol is not None:
                    y = y_pol
                    if p.phi(y) <= opts.comp_tol:
                        status = LCQPStatus.OPTIMAL
        return result(y, status, rho_final, outer, trace)

    if p.phi(y) <= opts.comp_tol:
        return finalize(y, LCQPStatus.OPTIMAL, 0.0, 0, ())

    # The rho=0 point minimizes the objective over the relaxed set, so its
    # value lower-bounds every complementarity-feasible point.
    lower_obj = p.objective(y)
    cert_tol = 1e-9 * (1.0 + abs(lower_obj))

    if opts.warm_start is not None:
        w = np.asarray(opts.warm_start, dtype=float)
        if w.shape == (p.n_y,) and _is_relaxed_feasible(p, w):
            merit_w = p.objective(w) + opts.rho0 * p.phi(w)
            merit_y = p.objective(y) + opts.rho0 * p.phi(y)
            if merit_w < merit_y:
                y = w

    rho = opts.rho0
    trace = []
    outer = 0
    cycle_outers = 0
    stagnant = 0
    enum_tried = False
    phi_prev = p.phi(y)
    while outer < opts.max_outer:
        outer += 1
        trace.append(rho)
        prev2 = None
        cycled = False
        for _ in range(opts.max_inner):
            if out_of_time():
                return finalize(y, LCQPStatus.TIME_BUDGET, rho, outer, trace)
            d = rho * (p.L.T @ (p.R @ y + p.r_const) + p.R.T @ (p.L @ y + p.l_const))
            y_new, st = _kernel_solve(p.Q, p.g + d, form, opts.max_inner)
            inner += 1
            if st != QPStatus.OPTIMAL:
                break  # feasible set is nonempty; treat anomalies as a stall
            step = float(np.linalg.norm(y_new - y))
            two_step = np.inf if prev2 is None else float(np.linalg.norm(y_new - prev2))
            prev2 = y
            y = y_new
            if p.phi(y) <= opts.comp_tol:
                return finalize(y, LCQPStatus.OPTIMAL, rho, outer, trace)
            if step < opts.stat_tol:
                break
            if two_step < opts.stat_tol:
                cycled = True  # alternating between two branch basins
                break
        cycle_outers = cycle_outers + 1 if cycled else 0
        phi_now = p.phi(y)
        stagnant = stagnant + 1 if phi_now > 0.5 * phi_prev else 0
        phi_prev = phi_now
        # certificate exit: a branch-exact feasible point whose objective
        # matches the relaxation bound cannot be improved upon
        if not out_of_time():
            y_pol = _polish_ladder(p, y, A_sub, b_sub, eq_sub, opts.max_inner, deep=False)
            inner += 1
            if (
                y_pol is not None
                and p.phi(y_pol) <= opts.comp_tol
                and p.objective(y_pol) <= lower_obj + cert_tol
            ):
                return result(y_pol, LCQPStatus.OPTIMAL, rho, outer, trace)
        # penalty plateau: when raising rho barely moves the residual the
        # exact-penalty threshold is still far away; for small pair counts
        # the branch enumeration settles the answer exactly instead
        if (
            stagnant >= 2
            and not enum_tried
            and p.n_c <= _ENUM_POLISH_LIMIT
            and not out_of_time()
        ):
            enum_tried = True
            y_enum = _best_branch(p, A_sub, b_sub, eq_sub, opts.max_inner)
            inner += 1
            if y_enum is not None:
                return result(y_enum, LCQPStatus.OPTIMAL, rho, outer, trace)
        if cycle_outers >= 3:
            break  # raising rho keeps oscillating; the deep polish decides
        rho *= opts.beta
    return finalize(y, LCQPStatus.MAX_PENALTY, trace[-1], outer, trace)


# ---------------------------------------------------------------------------
# brute-force oracles

def enumerate_lcqp_oracle(problem, max_iter=1000):
    """Exact global optimum by enumerating all 2^n_c complementarity branches.

    Returns (y, objective) for the best feasible branch, or None when every
    branch is infeasible. Intended for small test problems (n_c <= 20).
    """
    p = problem
    if p.n_c > 20:
        raise ScenarioValidationError("n_c", "oracle enumeration is capped at 20 pairs")
    A_sub, b_sub, eq_sub = _relaxed_constraints(p)
    base_rows = A_sub if A_sub is not None else np.zeros((0, p.n_y))
    base_rhs = b_sub if b_sub is not None else np.zeros(0)

    best = None
    for mask in range(1 << p.n_c):
        rows = []
        rhs = []
        for i in range(p.n_c):
            if mask & (1 << i):
                rows.append(p.L[i])
                rhs.append(-p.l_const[i])
            else:
                rows.append(p.R[i])
                rhs.append(-p.r_const[i])
        if rows:
            A_all = np.vstack([base_rows, np.array(rows)])
            b_all = np.concatenate([base_rhs, np.array(rhs)])
            eq_all = tuple(eq_sub) + tuple(range(len(base_rhs), len(b_all)))
        elif len(base_rhs):
            A_all, b_all, eq_all = base_rows, base_rhs, eq_sub
        else:
            A_all, b_all, eq_all = None, None, ()
        y, st = solve_qp(p.Q, p.g, A_all, b_all, eq_all, p.lb, p.ub, max_iter=max_iter)
        if st != QPStatus.OPTIMAL:
            continue
        f = p.objective(y)
        if best is None or f < best[1]:
            best = (y, f)
    return best


def lcp_feasible(u, G):
    """Solve LCP(u, G) by branch enumeration: lambda >= 0, G lambda + u >= 0,
    lambda^T (G lambda + u) <= 1e-10. Returns lambda or None."""
    u = np.asarray(u, dtype=float)
    G = np.asarray(G, dtype=float)
    n = u.shape[0]
    if n > 20:
        raise ScenarioValidationError("n", "enumeration is capped at 20")
    for mask in range(1 << n):
        idx = [i for i in range(n) if mask & (1 << i)]
        lam = np.zeros(n)
        if idx:
            sub = G[np.ix_(idx, idx)]
            sol, *_ = np.linalg.lstsq(sub, -u[idx], rcond=None)
            if np.max(np.abs(sub @ sol + u[idx])) > 1e-9:
                continue
            lam[idx] = sol
        if lam.min() < -1e-12:
            continue
        lam = np.clip(lam, 0.0, None)
        w = G @ lam + u
        if w.min() < -1e-9:
            continue
        if abs(lam @ w) <= 1e-10:
            return lam
    return None


# ---------------------------------------------------------------------------
# regression-fixture serialization

def dump_problem(problem, path):
    """Write the problem as JSON. Constant complementarity offsets appear as
    optional l_const / r_const keys (omitted when zero)."""
    p = problem
    doc = {
        "Q": p.Q.tolist(),
        "g": p.g.tolist(),
        "A": p.A.tolist(),
        "b": p.b.tolist(),
        "eq_rows": list(p.eq_rows),
        "L": p.L.tolist(),
        "R": p.R.tolist(),
        "lb": p.lb.tolist() if p.lb is not None else None,
        "ub": p.ub.tolist() if p.ub is not None else None,
    }
    if np.any(p.l_const):
        doc["l_const"] = p.l_const.tolist()
    if np.any(p.r_const):
        doc["r_const"] = p.r_const.tolist()
    Path(path).write_text(json.dumps(doc, indent=1))


def load_problem(path):
    doc = json.loads(Path(path).read_text())
    def arr(key):
        return np.asarray(doc[key], dtype=float) if doc.get(key) is not None else None
    return LCQProblem(
        Q=arr("Q"), g=arr("g"),
        A=arr("A"), b=arr("b"), eq_rows=tuple(doc.get("eq_rows", ())),
        L=arr("L"), R=arr("R"),
        lb=arr("lb"), ub=arr("ub"),
        l_const=arr("l_const"), r_const=arr("r_const"),
    )
