"""Mather constant of a finite cost graph by three independent routes.

* cycle route: minimum cycle mean by Karp's algorithm, with a witness cycle;
* LP route: ``min <A, π>`` over probability couplings with equal marginals;
* limit route: ``min A_n / n`` along the min-plus powers, with the
  oscillation bound ``K = max_n |min A_n - n c|``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CertificateUnavailable, InvalidInput, NoFiniteCycle
from .extreal import INF, as_cost, is_exact, is_finite, is_pinf, is_standard, to_float
from .lp import linprog
from .minplus import backward_apply, convolve, strongly_connected


def as_prob(weights, n: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """Validate a probability vector; entries above ``-1e-15`` are clamped to 0."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise InvalidInput("probability vector must be one-dimensional")
    if n is not None and w.size != n:
        from .errors import DimensionMismatch
        raise DimensionMismatch(f"probability vector has length {w.size}, expected {n}")
    if (w < -1e-15).any() or not np.isfinite(w).all():
        raise InvalidInput("probability vector has negative or non-finite entries")
    w = np.clip(w, 0.0, None)
    if abs(w.sum() - 1.0) > tol:
        raise InvalidInput(f"probability vector sums to {w.sum()!r}")
    return w


@dataclass
class Coupling:
    matrix: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    @classmethod
    def from_matrix(cls, pi):
        pi = np.clip(np.asarray(pi, dtype=float), 0.0, None)
        return cls(pi, pi.sum(axis=1), pi.sum(axis=0))

    def residual(self, mu=None, nu=None) -> float:
        """Marginal residual against (mu, nu), or between the two marginals."""
        if mu is None and nu is None:
            return float(np.abs(self.row_marginal - self.col_marginal).max())
        return float(max(np.abs(self.row_marginal - mu).max(),
                         np.abs(self.col_marginal - nu).max()))

    def support(self, thresh: float = 1e-9):
        return [tuple(map(int, p)) for p in np.argwhere(self.matrix > thresh)]


@dataclass
class DiagnosticsReport:
    c: float
    minima: list            # m_n = min A_n
    maxima: list            # s_n = max A_n
    estimates: list         # m_n / n
    oscillation: list       # s_n - m_n
    cesaro: list            # (1/n) <T^n g, μ̄> + c
    K: float
    strongly_connected: bool
    bound_holds: bool | None   # None = not applicable

    @property
    def N(self) -> int:
        return len(self.minima)


@dataclass
class MatherCertificate:
    c: float
    cycle: list
    measure: Coupling
    potentials: np.ndarray
    c_lp: float
    lp_measure: Coupling
    diagnostics: DiagnosticsReport | None = None
    checks: dict = field(default_factory=dict)


def _rotate(cycle):
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


def cycle_mean(A, cycle):
    L = len(cycle)
    total = sum((A[cycle[i], cycle[(i + 1) % L]] for i in range(L)),
                Fraction(0) if is_exact(np.asarray(A)) else 0.0)
    return total / L


def mather_constant_cycle(A):
    """Minimum cycle mean and a cycle attaining it (Karp's algorithm).

    Returns ``(c, cycle)`` where ``cycle = [v0, v1, ...]`` stands for the
    closed walk v0 -> v1 -> ... -> v0, rotated to start at its lowest index.
    Raises :class:`NoFiniteCycle` when every cycle uses a +inf edge.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput("cost matrix must be square")
    n = A.shape[0]
    exact = is_exact(A)
    zero = Fraction(0) if exact else 0.0
    D = np.empty((n + 1, n), dtype=object if exact else float)
    D[0] = zero
    pred = np.zeros((n + 1, n), dtype=int)
    for k in range(1, n + 1):
        S = D[k - 1][:, None] + A
        arg = np.argmin(S, axis=0)
        pred[k] = arg
        D[k] = S[arg, np.arange(n)]

    best = None
    best_v = -1
    for v in range(n):
        if D[n, v] == INF:
            continue
        worst = None
        for k in range(n):
            if D[k, v] == INF:
                continue
            val = (D[n, v] - D[k, v]) / (n - k)
            if worst is None or val > worst:
                worst = val
        if worst is not None and (best is None or worst < best):
            best, best_v = worst, v
    if best is None:
        raise NoFiniteCycle("no cycle with all-finite edges")

    walk = [best_v]
    for k in range(n, 0, -1):
        walk.append(int(pred[k][walk[-1]]))
    walk.reverse()  # walk[0] -> ... -> walk[n] = best_v
    last = {}
    cycle = None
    for i, v in enumerate(walk):
        if v in last:
            cycle = walk[last[v]:i]
            break
        last[v] = i
    return best, _rotate(cycle)


def _lp_system(A):
    A = to_float(np.asarray(A))
    n = A.shape[0]
    idx = np.argwhere(np.isfinite(A))
    if idx.size == 0:
        raise NoFiniteCycle("cost matrix has no finite entry")
    costs = A[idx[:, 0], idx[:, 1]]
    nv = len(idx)
    Aeq = np.zeros((n + 1, nv))
    Aeq[idx[:, 0], np.arange(nv)] += 1.0
    Aeq[idx[:, 1], np.arange(nv)] -= 1.0
    Aeq[n] = 1.0
    beq = np.zeros(n + 1)
    beq[n] = 1.0
    return idx, costs, Aeq, beq


def mather_constant_lp(A, tol: float = 1e-9):
    """``min <A, π>`` over probability couplings π with π₁ = π₂.

    Returns ``(c, coupling)``.
    """
    A = np.asarray(A)
    n = A.shape[0]
    idx, costs, Aeq, beq = _lp_system(A)
    res = linprog(costs, A_eq=Aeq, b_eq=beq, tol=tol)
    pi = np.zeros((n, n))
    pi[idx[:, 0], idx[:, 1]] = np.clip(res.x, 0.0, None)
    pi /= pi.sum()
    return res.fun, Coupling.from_matrix(pi)


def cycle_measure(n: int, cycle) -> Coupling:
    pi = np.zeros((n, n))
    L = len(cycle)
    for i in range(L):
        pi[cycle[i], cycle[(i + 1) % L]] += 1.0 / L
    return Coupling.from_matrix(pi)


def convergence_diagnostics(A, g, N: int, c=None, measure: Coupling | None = None) -> DiagnosticsReport:
    """Sequences ``min A_n``, ``max A_n`` and Cesàro averages for n = 1..N."""
    if N < 2:
        raise InvalidInput("N must be at least 2")
    A = np.asarray(A)
    if c is None:
        c, cycle = mather_constant_cycle(A)
        if measure is None:
            measure = cycle_measure(A.shape[0], cycle)
    if measure is None:
        _, measure = mather_constant_lp(A)
    mu_bar = measure.row_marginal
    cf = float(c)
    g = np.asarray(g)
    An = A
    Tg = g
    minima, maxima, est, osc, ces = [], [], [], [], []
    for n in range(1, N + 1):
        if n > 1:
            An = convolve(An, A)
        Tg = backward_apply(A, Tg)
        finite = is_finite(An)
        m_n = float(np.min(to_float(An)))
        s_n = float(np.max(to_float(An)))
        minima.append(m_n)
        maxima.append(s_n)
        est.append(m_n / n)
        osc.append(s_n - m_n if finite.all() else INF)
        Tgf = to_float(Tg)
        support = mu_bar > 0
        ces.append(float(mu_bar[support] @ Tgf[support]) / n + cf)
    K = max(abs(m - (n + 1) * cf) for n, m in enumerate(minima))
    sc = strongly_connected(A)
    holds = None
    if sc:
        holds = all(abs(m / (n + 1) - cf) <= K / (n + 1) + 1e-12 for n, m in enumerate(minima))
    return DiagnosticsReport(c=cf, minima=minima, maxima=maxima, estimates=est,
                             oscillation=osc, cesaro=ces, K=K,
                             strongly_connected=sc, bound_holds=holds)


def dual_certificate(A, c=None, tol: float = 1e-9) -> np.ndarray:
    """Finite ``h`` with ``min_x (h - T h)(x) = c``.

    Uses the normalised weak KAM solution when it is finite everywhere;
    otherwise falls back to shortest-path potentials of ``A - c`` from a
    virtual source, which are finite subsolutions calibrated on every
    critical cycle.
    """
    from .weakkam import weak_kam_bundle
    from .minplus import kleene_plus

    A = np.asarray(A)
    if not is_standard(A):
        raise CertificateUnavailable("cost matrix is not standard (a row is all +inf)")
    try:
        bundle = weak_kam_bundle(A, c=c, tol=tol)
    except NoFiniteCycle as exc:
        raise CertificateUnavailable("Mather constant is +inf") from exc
    h = bundle.h
    if is_finite(h).all():
        return h
    B = A - bundle.c
    Bp = kleene_plus(B, tol=tol)
    # column minima of B⁺ capped at 0: distances from a virtual source
    h = np.minimum(Bp.min(axis=0), 0)
    if not is_finite(h).all():
        raise CertificateUnavailable("no finite subsolution found")
    return h


def mather_certificate(A, g=None, N: int = 100, tol: float = 1e-9) -> MatherCertificate:
    """Run all three routes and the dual certificate on one instance."""
    A = np.asarray(A)
    n = A.shape[0]
    c, cycle = mather_constant_cycle(A)
    c_lp, lp_meas = mather_constant_lp(A, tol=tol)
    meas = cycle_measure(n, cycle)
    h = dual_certificate(A, c=c, tol=tol)
    g = np.zeros(n) if g is None else np.asarray(g, dtype=float)
    diag = convergence_diagnostics(A, g, N, c=c, measure=lp_meas)
    Th = backward_apply(A, h)
    dual_gap = abs(float(np.min(to_float(h - Th))) - float(c))
    checks = {
        "cycle_vs_lp": abs(float(c) - c_lp),
        "cycle_mean_residual": abs(float(cycle_mean(A, cycle)) - float(c)),
        "dual_certificate_residual": dual_gap,
        "limit_residual": abs(diag.estimates[-1] - float(c)),
        "limit_bound": diag.K / diag.N,
    }
    return MatherCertificate(c=c, cycle=cycle, measure=meas, potentials=h, c_lp=c_lp,
                             lp_measure=lp_meas, diagnostics=diag, checks=checks)
