"""Dense bounded-variable simplex with Bland's rule and basis-based duals.

The solver works on an internal minimize form: one slack column per row turns
every relation into an equality, so the working system is ``[A | I] x = b``
with individual bounds on all columns (``<=`` rows get slack bounds [0, inf),
``>=`` rows (-inf, 0], equalities [0, 0]).  Feasibility is reached in a first
phase that adds one signed artificial column per initially violated row and
minimizes their sum; the second phase optimizes the true objective from the
feasible basis.  Entering and leaving variables are chosen by Bland's rule
(lowest eligible index), which rules out cycling; the iteration cap is only a
circuit breaker.

Basic values and simplex multipliers are recomputed from the factored basis at
every iteration.  Problems in this package are desk-scale (tens of rows), so
the dense refactorization costs nothing and buys exact, reproducible duals.
"""

from __future__ import annotations

import math

import numpy as np

from .lp import (
    INF,
    MAX_ITERATIONS,
    PIVOT_TOL,
    FEAS_TOL,
    LinearProgram,
    LpSolution,
    SolverFailureError,
)

_RATIO_TIE = 1e-9


class _Internal:
    """Slack-augmented minimize form of a LinearProgram."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        self.maximizing = lp.sense == "maximize"
        self.col_names = list(lp.columns)
        self.row_names = list(lp.rows)
        n = len(self.col_names)
        m = len(self.row_names)
        self.n_struct = n
        self.n_rows = m

        col_index = {name: j for j, name in enumerate(self.col_names)}
        self.A = np.zeros((m, n + m))
        self.b = np.zeros(m)
        self.lo = np.empty(n + m)
        self.up = np.empty(n + m)
        self.c_ext = np.zeros(n + m)

        for j, name in enumerate(self.col_names):
            col = lp.columns[name]
            self.lo[j] = col.lower
            self.up[j] = col.upper
            self.c_ext[j] = col.objective

        for i, name in enumerate(self.row_names):
            row = lp.rows[name]
            for cname, coef in row.coeffs.items():
                self.A[i, col_index[cname]] += coef
            self.b[i] = row.rhs
            self.A[i, n + i] = 1.0
            if row.relation == "<=":
                self.lo[n + i], self.up[n + i] = 0.0, INF
            elif row.relation == ">=":
                self.lo[n + i], self.up[n + i] = -INF, 0.0
            else:
                self.lo[n + i], self.up[n + i] = 0.0, 0.0

        # internal objective is always minimized
        self.c_int = -self.c_ext if self.maximizing else self.c_ext.copy()

    def names(self) -> list[str]:
        return self.col_names + [f"slack:{r}" for r in self.row_names]


class _State:
    def __init__(self, internal: _Internal):
        self.prob = internal
        self.A = internal.A
        self.b = internal.b
        self.lo = internal.lo.copy()
        self.up = internal.up.copy()
        self.n_total = internal.A.shape[1]
        self.basis: list[int] = []
        self.in_basis = np.zeros(self.n_total, dtype=bool)
        self.at_upper = np.zeros(self.n_total, dtype=bool)
        self.x = np.zeros(self.n_total)
        self.artificial_from = self.n_total  # columns >= this index are artificial
        self.iterations = 0

    def nonbasic_value(self, j: int) -> float:
        if self.at_upper[j]:
            return self.up[j]
        if self.lo[j] > -INF:
            return self.lo[j]
        return 0.0

    def refresh_basics(self) -> None:
        nonbasic = [j for j in range(self.n_total) if not self.in_basis[j]]
        for j in nonbasic:
            self.x[j] = self.nonbasic_value(j)
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        B = self.A[:, self.basis]
        self.x[self.basis] = np.linalg.solve(B, rhs)

    def multipliers(self, cost: np.ndarray) -> np.ndarray:
        B = self.A[:, self.basis]
        return np.linalg.solve(B.T, cost[self.basis])


def _setup(internal: _Internal) -> _State:
    st = _State(internal)
    n, m = internal.n_struct, internal.n_rows

    # rest every column at a bound: finite lower preferred, else finite upper,
    # else free at zero
    for j in range(st.n_total):
        st.at_upper[j] = st.lo[j] == -INF and st.up[j] < INF
        st.x[j] = st.nonbasic_value(j)

    residual = st.b - st.A[:, :n] @ st.x[:n]

    art_cols = []
    art_rows = []
    basis = []
    for i in range(m):
        s = n + i
        if st.lo[s] - FEAS_TOL <= residual[i] <= st.up[s] + FEAS_TOL:
            basis.append(s)
        else:
            # slack pinned nonbasic at its nearest bound, a signed artificial
            # carries the remaining gap
            st.at_upper[s] = residual[i] > st.up[s]
            sigma = 1.0 if residual[i] > st.nonbasic_value(s) else -1.0
            art_cols.append(sigma)
            art_rows.append(i)
            basis.append(-len(art_cols))  # placeholder, resolved below

    if art_cols:
        k = len(art_cols)
        block = np.zeros((m, k))
        for t, (i, sigma) in enumerate(zip(art_rows, art_cols)):
            block[i, t] = sigma
        st.A = np.hstack([st.A, block])
        st.lo = np.concatenate([st.lo, np.zeros(k)])
        st.up = np.concatenate([st.up, np.full(k, INF)])
        st.x = np.concatenate([st.x, np.zeros(k)])
        st.at_upper = np.concatenate([st.at_upper, np.zeros(k, dtype=bool)])
        st.artificial_from = st.n_total
        st.n_total += k
        st.in_basis = np.zeros(st.n_total, dtype=bool)
        next_art = st.artificial_from
        for pos, entry in enumerate(basis):
            if entry < 0:
                basis[pos] = next_art
                next_art += 1

    st.basis = basis
    st.in_basis[:] = False
    st.in_basis[st.basis] = True
    st.refresh_basics()
    return st


def _iterate(st: _State, cost: np.ndarray) -> str:
    """Run simplex iterations on the current phase cost; returns optimal|unbounded."""
    while True:
        if st.iterations >= MAX_ITERATIONS:
            raise SolverFailureError(f"iteration cap {MAX_ITERATIONS} exceeded")
        st.iterations += 1

        y = st.multipliers(cost)
        d = cost - y @ st.A

        entering = -1
        direction = 0.0
        for j in range(st.n_total):
            if st.in_basis[j] or st.lo[j] == st.up[j]:
                continue
            free = st.lo[j] == -INF and st.up[j] == INF
            if free:
                if d[j] < -PIVOT_TOL:
                    entering, direction = j, 1.0
                    break
                if d[j] > PIVOT_TOL:
                    entering, direction = j, -1.0
                    break
            elif st.at_upper[j]:
                if d[j] > PIVOT_TOL:
                    entering, direction = j, -1.0
                    break
            else:
                if d[j] < -PIVOT_TOL:
                    entering, direction = j, 1.0
                    break
        if entering < 0:
            return "optimal"

        B = st.A[:, st.basis]
        w = np.linalg.solve(B, st.A[:, entering])

        t_flip = INF
        if st.lo[entering] > -INF and st.up[entering] < INF:
            t_flip = st.up[entering] - st.lo[entering]

        t_best = INF
        leave_pos = -1
        for pos, bi in enumerate(st.basis):
            delta = direction * w[pos]
            if delta > PIVOT_TOL:
                if st.lo[bi] == -INF:
                    continue
                t = max(0.0, (st.x[bi] - st.lo[bi]) / delta)
            elif delta < -PIVOT_TOL:
                if st.up[bi] == INF:
                    continue
                t = max(0.0, (st.up[bi] - st.x[bi]) / (-delta))
            else:
                continue
            if t < t_best - _RATIO_TIE:
                t_best, leave_pos = t, pos
            elif t <= t_best + _RATIO_TIE and (leave_pos < 0 or bi < st.basis[leave_pos]):
                t_best, leave_pos = min(t, t_best), pos

        if t_flip == INF and t_best == INF:
            return "unbounded"

        if t_flip <= t_best:
            st.at_upper[entering] = not st.at_upper[entering]
        else:
            bi = st.basis[leave_pos]
            delta = direction * w[leave_pos]
            st.at_upper[bi] = delta < 0  # increased to its upper bound
            st.in_basis[bi] = False
            st.basis[leave_pos] = entering
            st.in_basis[entering] = True
            start = st.nonbasic_value(entering)
            st.x[entering] = start + direction * t_best
        st.refresh_basics()


def _expel_artificials(st: _State) -> None:
    """After phase 1, swap basic artificials for structural/slack columns where possible."""
    m = len(st.basis)
    for pos in range(m):
        bi = st.basis[pos]
        if bi < st.artificial_from:
            continue
        B = st.A[:, st.basis]
        e = np.zeros(m)
        e[pos] = 1.0
        u = np.linalg.solve(B.T, e)
        replacement = -1
        for j in range(st.artificial_from):
            if st.in_basis[j]:
                continue
            if abs(u @ st.A[:, j]) > PIVOT_TOL:
                replacement = j
                break
        if replacement >= 0:
            st.in_basis[bi] = False
            st.at_upper[bi] = False
            st.basis[pos] = replacement
            st.in_basis[replacement] = True
            st.refresh_basics()


def _extract(internal: _Internal, st: _State, status: str) -> LpSolution:
    n, m = internal.n_struct, internal.n_rows
    names = internal.names()

    if status != "optimal":
        return LpSolution(status=status, primal={}, duals={}, reduced_costs={},
                          objective_value=math.nan, basis=(),
                          nonbasic_at_upper=(), degenerate=False,
                          iterations=st.iterations)

    cost = np.zeros(st.n_total)
    cost[: n + m] = internal.c_int
    y_int = st.multipliers(cost)
    y_ext = -y_int if internal.maximizing else y_int

    x_struct = st.x[:n]
    objective = float(internal.c_ext[:n] @ x_struct) + internal.lp.constant
    reduced_ext = internal.c_ext[:n] - y_ext @ internal.A[:, :n]

    degenerate = False
    for bi in st.basis:
        if bi >= st.artificial_from:
            continue
        if (st.lo[bi] > -INF and abs(st.x[bi] - st.lo[bi]) <= 1e-9) or \
           (st.up[bi] < INF and abs(st.x[bi] - st.up[bi]) <= 1e-9):
            degenerate = True
            break

    basis_names = tuple(
        names[bi] if bi < n + m else f"artificial:{internal.row_names[bi - st.artificial_from]}"
        for bi in st.basis
    )
    at_upper = tuple(names[j] for j in range(n + m)
                     if not st.in_basis[j] and st.at_upper[j])

    return LpSolution(
        status="optimal",
        primal={name: float(x_struct[j]) + 0.0 for j, name in enumerate(internal.col_names)},
        duals={name: float(y_ext[i]) + 0.0 for i, name in enumerate(internal.row_names)},
        reduced_costs={name: float(reduced_ext[j]) + 0.0 for j, name in enumerate(internal.col_names)},
        objective_value=objective,
        basis=basis_names,
        nonbasic_at_upper=at_upper,
        degenerate=degenerate,
        iterations=st.iterations,
    )


def solve_program(lp: LinearProgram) -> LpSolution:
    internal = _Internal(lp)
    st = _setup(internal)

    if st.n_total > st.artificial_from:
        phase1 = np.zeros(st.n_total)
        phase1[st.artificial_from:] = 1.0
        outcome = _iterate(st, phase1)
        if outcome == "unbounded":  # cannot happen: objective bounded below by 0
            raise SolverFailureError("phase 1 reported unbounded")
        infeasibility = float(st.x[st.artificial_from:].sum())
        if infeasibility > FEAS_TOL:
            return _extract(internal, st, "infeasible")
        st.lo[st.artificial_from:] = 0.0
        st.up[st.artificial_from:] = 0.0
        _expel_artificials(st)

    cost = np.zeros(st.n_total)
    cost[: internal.n_struct + internal.n_rows] = internal.c_int
    outcome = _iterate(st, cost)
    if outcome == "unbounded":
        return _extract(internal, st, "unbounded")
    return _extract(internal, st, "optimal")


def solution_from_basis(lp: LinearProgram, basis: tuple[str, ...],
                        nonbasic_at_upper: tuple[str, ...]) -> LpSolution:
    """Rebuild the solution a given basis identifies; audits solver output."""
    internal = _Internal(lp)
    names = internal.names()
    index = {name: j for j, name in enumerate(names)}
    st = _State(internal)
    st.basis = [index[name] for name in basis]
    st.in_basis[st.basis] = True
    for name in nonbasic_at_upper:
        st.at_upper[index[name]] = True
    st.refresh_basics()
    return _extract(internal, st, "optimal")
