"""Small linear programs.

Desk-scale problems (a few hundred tableau rows at most) are solved by a
two-phase dense tableau simplex written here; larger ones are routed to
HiGHS through :func:`scipy.optimize.linprog`. Both paths return the same
:class:`LPResult`, including equality-constraint multipliers, which several
callers use as witnesses (e.g. the optimal effect in a distance LP).

Every call builds its own tableau, so the solver is reentrant and safe to
use from several threads at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog as _scipy_linprog

# tableau entries (rows * columns) above which HiGHS is used
AUTO_DENSE_LIMIT = 60_000

_PIVOT_TOL = 1e-11
_COST_TOL = 1e-11
_MAX_DEGENERATE = 50


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None = None
    fun: float | None = None
    # multipliers of the A_eq rows, d(fun)/d(b_eq)
    eq_duals: np.ndarray | None = None
    # phase-one residual; 0 for feasible problems, nan if unknown
    infeasibility: float = 0.0
    method: str = "simplex"

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
            maximize=False, method="auto") -> LPResult:
    """Minimize (or maximize) ``c @ x`` subject to linear constraints.

    ``bounds`` follows scipy: ``None`` means every variable is nonnegative,
    otherwise a single ``(lo, hi)`` pair or one pair per variable, with
    ``None`` for an infinite bound.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("constraint shapes do not match the cost vector")
    bounds = _normalize_bounds(bounds, n)
    sign = -1.0 if maximize else 1.0

    if method == "auto":
        rows = A_ub.shape[0] + A_eq.shape[0] + sum(hi is not None for _, hi in bounds)
        cols = n + sum(lo is None and hi is None for lo, hi in bounds) + A_ub.shape[0]
        method = "simplex" if rows * (cols + rows) <= AUTO_DENSE_LIMIT else "highs"

    if method == "highs":
        res = _highs(sign * c, A_ub, b_ub, A_eq, b_eq, bounds)
    elif method == "simplex":
        res = _dense(sign * c, A_ub, b_ub, A_eq, b_eq, bounds)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if res.success and maximize:
        res.fun = -res.fun
        res.eq_duals = -res.eq_duals
    return res


def _normalize_bounds(bounds, n):
    if bounds is None:
        return [(0.0, None)] * n
    if len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        return [tuple(bounds)] * n
    if len(bounds) != n:
        raise ValueError("one bound pair per variable expected")
    return [tuple(b) for b in bounds]


def _highs(c, A_ub, b_ub, A_eq, b_eq, bounds):
    options = {"primal_feasibility_tolerance": 1e-10,
               "dual_feasibility_tolerance": 1e-10}
    r = _scipy_linprog(c, A_ub=A_ub if A_ub.size else None, b_ub=b_ub if b_ub.size else None,
                       A_eq=A_eq if A_eq.size else None, b_eq=b_eq if b_eq.size else None,
                       bounds=bounds, method="highs", options=options)
    if r.status == 0:
        duals = np.asarray(r.eqlin.marginals) if A_eq.size else np.zeros(0)
        return LPResult("optimal", np.asarray(r.x), float(r.fun), duals, 0.0, "highs")
    if r.status == 2:
        return LPResult("infeasible", infeasibility=float("nan"), method="highs")
    if r.status == 3:
        return LPResult("unbounded", method="highs")
    raise RuntimeError(f"HiGHS failed: {r.message}")


def _dense(c, A_ub, b_ub, A_eq, b_eq, bounds):
    """Rewrite into ``min c'y, A y = b, y >= 0`` and run the tableau simplex."""
    n = c.size
    # x = offset + T @ y
    cols = []
    offset = np.zeros(n)
    upper_rows = []
    for i, (lo, hi) in enumerate(bounds):
        if lo is not None:
            offset[i] = lo
            cols.append((i, 1.0))
            if hi is not None:
                upper_rows.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            offset[i] = hi
            cols.append((i, -1.0))
        else:
            cols.append((i, 1.0))
            cols.append((i, -1.0))
    T = np.zeros((n, len(cols)))
    for k, (i, s) in enumerate(cols):
        T[i, k] = s
    ny = len(cols)

    n_ub, n_eq, n_up = A_ub.shape[0], A_eq.shape[0], len(upper_rows)
    n_slack = n_ub + n_up
    m = n_ub + n_eq + n_up
    A = np.zeros((m, ny + n_slack))
    b = np.zeros(m)
    A[:n_ub, :ny] = A_ub @ T
    b[:n_ub] = b_ub - A_ub @ offset
    A[n_ub:n_ub + n_eq, :ny] = A_eq @ T
    b[n_ub:n_ub + n_eq] = b_eq - A_eq @ offset
    for r, (k, width) in enumerate(upper_rows):
        A[n_ub + n_eq + r, k] = 1.0
        b[n_ub + n_eq + r] = width
    slack_rows = list(range(n_ub)) + list(range(n_ub + n_eq, m))
    for s, r in enumerate(slack_rows):
        A[r, ny + s] = 1.0
    cost = np.zeros(ny + n_slack)
    cost[:ny] = c @ T

    status, y, duals, infeas = _simplex_standard(cost, A, b)
    if status != "optimal":
        return LPResult(status, infeasibility=infeas)
    x = offset + T @ y[:ny]
    return LPResult("optimal", x, float(c @ x), duals[n_ub:n_ub + n_eq], infeas)


def _pivot(T, basis, i, j):
    row = T[i] / T[i, j]
    T -= np.outer(T[:, j], row)
    T[i] = row
    basis[i] = j


def _run(T, basis, ncols):
    m = T.shape[0] - 1
    bland = False
    degenerate = 0
    for _ in range(50_000):
        r = T[-1, :ncols]
        if bland:
            cand = np.flatnonzero(r < -_COST_TOL)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0])
        else:
            j = int(np.argmin(r))
            if r[j] >= -_COST_TOL:
                return "optimal"
        col = T[:m, j]
        pos = col > _PIVOT_TOL
        if not pos.any():
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-13)
        i = int(ties[np.argmin(np.asarray(basis)[ties])])
        if rmin <= 1e-13:
            degenerate += 1
            if degenerate > _MAX_DEGENERATE:
                bland = True
        else:
            degenerate = 0
        _pivot(T, basis, i, j)
    raise RuntimeError("simplex iteration limit reached")


def _simplex_standard(c, A, b):
    """Two-phase tableau simplex for ``min c'y, A y = b, y >= 0``.

    Returns ``(status, y, duals, phase_one_residual)``; duals solve
    ``A_B' u = c_B`` in the caller's row orientation.
    """
    A = A.copy()
    b = b.copy()
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    basis = [-1] * m
    for j in range(n):
        col = A[:, j]
        nz = np.flatnonzero(col)
        if nz.size == 1 and col[nz[0]] == 1.0 and basis[nz[0]] == -1:
            basis[nz[0]] = j
    need = [i for i in range(m) if basis[i] == -1]
    na = len(need)
    T = np.zeros((m + 1, n + na + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, i in enumerate(need):
        T[i, n + k] = 1.0
        basis[i] = n + k

    infeas = 0.0
    if na:
        T[-1, :] = 0.0
        T[-1, n:n + na] = 1.0
        for i in need:
            T[-1] -= T[i]
        _run(T, basis, n + na)
        infeas = max(-T[-1, -1], 0.0)
        scale = 1.0 + np.abs(b).max(initial=0.0)
        if infeas > 1e-10 * scale:
            return "infeasible", None, None, infeas
        keep = []
        for i in range(m):
            if basis[i] >= n:
                nz = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
                if nz.size:
                    _pivot(T, basis, i, int(nz[np.argmax(np.abs(T[i, nz]))]))
                    keep.append(i)
            else:
                keep.append(i)
        rows = keep + [m]
        T = np.ascontiguousarray(np.delete(T[rows], np.s_[n:n + na], axis=1))
        basis = [basis[i] for i in keep]
        A = A[keep]
        b = b[keep]
        flip = flip[keep]
        kept_rows = keep
    else:
        kept_rows = list(range(m))

    cb = c[basis]
    T[-1, :n] = c - cb @ T[:-1, :n]
    T[-1, -1] = -cb @ T[:-1, -1]
    status = _run(T, basis, n)
    if status != "optimal":
        return status, None, None, infeas

    y = np.zeros(n)
    y[basis] = T[:-1, -1]
    B = A[:, basis]
    try:
        yb = np.linalg.solve(B, b)
        if np.all(yb >= -1e-9):
            y[:] = 0.0
            y[basis] = np.maximum(yb, 0.0)
        u = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError:
        u = np.linalg.lstsq(B.T, c[basis], rcond=None)[0]
    u = np.where(flip, -u, u)
    duals = np.zeros(m)
    duals[kept_rows] = u
    return "optimal", y, duals, infeas
