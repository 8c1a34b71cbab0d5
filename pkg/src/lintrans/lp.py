"""Dense two-phase tableau simplex.

Small, dependency-free LP solver used by the Mather, transport and holonomic
programs.  Entering variables follow Dantzig's rule; after a run of
degenerate pivots the solver switches to Bland's rule, which also breaks
ratio-test ties (lowest basic index) so that termination is guaranteed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, LPError, Unbounded

_PIVOT_TOL = 1e-11
_DEGENERATE_SWITCH = 50


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    eq_duals: np.ndarray
    ub_duals: np.ndarray
    iterations: int


def _pivot(T, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    prow = T[r]
    buf = np.empty_like(prow)
    # row-wise axpy: pivot columns are sparse for transport-type programs
    for i in np.flatnonzero(col):
        np.multiply(prow, col[i], out=buf)
        np.subtract(T[i], buf, out=T[i])


def _run(T, basis, m, barred, tol, max_iter, it0=0):
    """Optimise the tableau in place; the objective lives in row ``m``."""
    it = it0
    degenerate_run = 0
    ncols = T.shape[1] - 1
    while True:
        d = T[m, :ncols].copy()
        d[barred] = 0.0
        cand = np.flatnonzero(d < -tol)
        if cand.size == 0:
            return it
        if degenerate_run >= _DEGENERATE_SWITCH:
            j = int(cand[0])
        else:
            j = int(cand[np.argmin(d[cand])])
        colj = T[:m, j]
        pos = np.flatnonzero(colj > _PIVOT_TOL)
        if pos.size == 0:
            raise Unbounded("objective is unbounded below")
        ratios = T[pos, -1] / colj[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(ties[np.argmin(np.asarray(basis)[ties])])
        degenerate_run = degenerate_run + 1 if T[r, -1] <= tol else 0
        _pivot(T, r, j)
        basis[r] = j
        it += 1
        if it > max_iter:
            raise LPError(f"simplex exceeded {max_iter} pivots")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None,
            tol: float = 1e-9, max_iter: int | None = None) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``.

    Variables are nonnegative unless flagged in the boolean mask ``free``.
    Returns primal ``x``, objective, and the dual multipliers of the equality
    and inequality rows (so that ``c - A_eq.T y_eq - A_ub.T y_ub >= 0`` on
    the nonnegative variables).
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)

    # split free variables x = x+ - x-
    free_idx = np.flatnonzero(free)
    cs = np.concatenate([c, -c[free_idx]])
    Aub = np.hstack([A_ub, -A_ub[:, free_idx]])
    Aeq = np.hstack([A_eq, -A_eq[:, free_idx]])
    nv = cs.size
    mu, me = Aub.shape[0], Aeq.shape[0]
    m = mu + me

    rows = np.vstack([np.hstack([Aub, np.eye(mu)]), np.hstack([Aeq, np.zeros((me, mu))])])
    rhs = np.concatenate([b_ub, b_eq])
    sign = np.where(rhs < 0, -1.0, 1.0)
    rows *= sign[:, None]
    rhs = rhs * sign

    # identity column per row: the slack for unflipped <= rows, else an artificial
    need_art = np.ones(m, dtype=bool)
    need_art[:mu] = sign[:mu] < 0
    art_rows = np.flatnonzero(need_art)
    na = art_rows.size
    art = np.zeros((m, na))
    art[art_rows, np.arange(na)] = 1.0
    nst = nv + mu
    ncols = nst + na

    T = np.zeros((m + 1, ncols + 1))
    T[:m, :nst] = rows
    T[:m, nst:ncols] = art
    T[:m, -1] = rhs
    ident_col = np.empty(m, dtype=int)
    ident_col[:mu] = nv + np.arange(mu)
    ident_col[art_rows] = nst + np.arange(na)
    basis = list(ident_col)

    if max_iter is None:
        max_iter = 50 * (m + ncols) + 1000
    barred = np.zeros(ncols, dtype=bool)

    it = 0
    if na:
        c1 = np.zeros(ncols)
        c1[nst:] = 1.0
        T[m, :ncols] = c1 - c1[basis] @ T[:m, :ncols]
        T[m, -1] = -c1[basis] @ T[:m, -1]
        it = _run(T, basis, m, barred, tol, max_iter)
        scale = 1.0 + np.abs(rhs).max(initial=0.0)
        if -T[m, -1] > 1e-7 * scale:
            raise Infeasible(f"phase-1 residual {-T[m, -1]:.3e}")
        # drive zero-level artificials out of the basis where possible
        for r in range(m):
            if basis[r] >= nst:
                cand = np.flatnonzero(np.abs(T[r, :nst]) > 1e-9)
                if cand.size:
                    _pivot(T, r, int(cand[0]))
                    basis[r] = int(cand[0])
        barred[nst:] = True

    c2 = np.zeros(ncols)
    c2[:nv] = cs
    T[m, :ncols] = c2 - c2[basis] @ T[:m, :ncols]
    T[m, -1] = -c2[basis] @ T[:m, -1]
    it = _run(T, basis, m, barred, tol, max_iter, it)

    xs = np.zeros(ncols)
    xs[basis] = T[:m, -1]
    x = xs[:n].copy()
    x[free_idx] -= xs[n:nv]
    y = (c2[ident_col] - T[m, ident_col]) * sign
    return LPResult(x=x, fun=float(c @ x), eq_duals=y[mu:], ub_duals=y[:mu], iterations=it)
