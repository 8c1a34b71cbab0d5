"""Linear transfers between probability vectors and their duality.

Four families are provided:

* :class:`CostOT` -- optimal transport ``min <A, π>`` over couplings;
* :class:`ConvexEnergyKL` -- ``KL(ν ‖ m) - k``, independent of ``μ``;
* :class:`TransferSet` -- 0 on feasible pairs, +inf otherwise;
* :class:`PointMap` -- 0 when ``ν = F#μ``, +inf otherwise.

Each family also exposes its Kantorovich operator through :meth:`operator`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffineShift, ConvexEnergy, MaxPlusCost, logsumexp_rows
from .errors import DimensionMismatch, Infeasible, InvalidInput, PrimalInfinite
from .extreal import INF, NINF, is_finite, to_float
from .lp import linprog
from .mather import Coupling, as_prob
from .minplus import backward_apply, convolve
from .transport import transport_simplex

PUSHFORWARD_TOL = 1e-10


@dataclass
class OTResult:
    value: float
    coupling: Coupling | None
    g: np.ndarray | None = None      # potential on the target
    t: np.ndarray | None = None      # potential on the source (t = T g)


def _probs(P, mu, nu):
    return as_prob(mu, P.n), as_prob(nu, P.n)


class CostOT:
    """Optimal transport with cost matrix ``A`` (entries in R ∪ {+inf})."""

    kind = "cost_ot"

    def __init__(self, A):
        A = to_float(np.asarray(A))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"cost must be square, got {A.shape}")
        if not is_finite(A).any(axis=1).all():
            raise InvalidInput("cost is not standard: some row is all +inf")
        self.A = A
        self.n = A.shape[0]

    def operator(self):
        return MaxPlusCost(self.A)

    def solve(self, mu, nu, tol: float = 1e-9) -> OTResult:
        mu, nu = _probs(self, mu, nu)
        n = self.n
        if np.isfinite(self.A).all():
            tr = transport_simplex(self.A, mu, nu)
            g = tr.v.copy()
            return OTResult(tr.value, Coupling.from_matrix(tr.plan), g, backward_apply(self.A, g))
        idx = np.argwhere(np.isfinite(self.A))
        nv = len(idx)
        Aeq = np.zeros((2 * n, nv))
        Aeq[idx[:, 0], np.arange(nv)] = 1.0
        Aeq[n + idx[:, 1], np.arange(nv)] = 1.0
        beq = np.concatenate([mu, nu])
        try:
            res = linprog(self.A[idx[:, 0], idx[:, 1]], A_eq=Aeq, b_eq=beq, tol=tol)
        except Infeasible:
            return OTResult(INF, None)
        pi = np.zeros((n, n))
        pi[idx[:, 0], idx[:, 1]] = np.clip(res.x, 0.0, None)
        # multipliers of the column constraints form a dual-feasible g;
        # replacing the row multipliers by T g can only improve the dual
        g = res.eq_duals[n:].copy()
        t = backward_apply(self.A, g)
        return OTResult(res.fun, Coupling.from_matrix(pi), g, t)

    def value(self, mu, nu):
        return self.solve(mu, nu).value


class ConvexEnergyKL:
    """``𝒯(μ, ν) = KL(ν ‖ m) - k`` with operator ``T g = log <m, e^g> + k``."""

    kind = "convex_energy_kl"

    def __init__(self, m, k: float = 0.0):
        m = as_prob(m)
        if (m <= 0).any():
            raise InvalidInput("reference measure needs full support")
        self.m, self.k = m, float(k)
        self.n = m.shape[0]

    def operator(self):
        return ConvexEnergy(self.m, self.k)

    def value(self, mu, nu):
        mu, nu = _probs(self, mu, nu)
        s = nu > 0
        return float(np.sum(nu[s] * np.log(nu[s] / self.m[s]))) - self.k

    def optimal_potential(self, nu):
        nu = as_prob(nu, self.n)
        with np.errstate(divide="ignore"):
            return np.where(nu > 0, np.log(nu / self.m), NINF)


class TransferSet:
    """Indicator transfer of the pairs joinable by a coupling supported on ``F``."""

    kind = "transfer_set"

    def __init__(self, F):
        F = np.asarray(F, dtype=bool)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise DimensionMismatch("feasibility matrix must be square")
        if not F.any(axis=1).all():
            raise InvalidInput("every point needs a feasible target")
        self.F = F
        self.n = F.shape[0]

    def cost(self):
        return np.where(self.F, 0.0, INF)

    def operator(self):
        return MaxPlusCost(self.cost())

    def value(self, mu, nu):
        v = CostOT(self.cost()).value(mu, nu)
        return 0.0 if v < INF else INF


class PointMap:
    """Deterministic transfer ``𝒯(μ, ν) = 0`` iff ``ν = F#μ``."""

    kind = "point_map"

    def __init__(self, F):
        F = np.asarray(F, dtype=int)
        n = F.shape[0]
        if F.ndim != 1 or (F < 0).any() or (F >= n).any():
            raise InvalidInput("F must be a total map on {0, ..., n-1}")
        self.F = F
        self.n = n

    def pushforward(self, mu):
        return np.bincount(self.F, weights=np.asarray(mu, dtype=float), minlength=self.n)

    def operator(self):
        return AffineShift(self.F, np.zeros(self.n))

    def value(self, mu, nu):
        mu, nu = _probs(self, mu, nu)
        return 0.0 if np.abs(self.pushforward(mu) - nu).sum() <= PUSHFORWARD_TOL else INF

    def invariant_measure(self, start: int = 0):
        """Uniform measure on the cycle eventually reached from ``start``."""
        cyc = _eventual_cycle(self.F, start)
        mu = np.zeros(self.n)
        mu[cyc] = 1.0 / len(cyc)
        return mu


def transfer_value(P, mu, nu):
    """``𝒯(μ, ν)`` for any of the transfer families."""
    return P.value(mu, nu)


def dual_value(P, mu, nu, tol: float = 1e-9):
    """Dual value ``<ν, g*> - <μ, T g*>`` and the maximiser ``g*``.

    The dual objective is evaluated through the operator, independently of
    the primal objective, so ``primal - dual`` is a genuine duality gap.
    """
    if isinstance(P, CostOT):
        res = P.solve(mu, nu, tol=tol)
        if res.value == INF:
            raise PrimalInfinite("no coupling with finite cost exists")
        mu, nu = _probs(P, mu, nu)
        g = res.g
        return float(nu @ g - mu @ backward_apply(P.A, g)), g
    if isinstance(P, ConvexEnergyKL):
        mu, nu = _probs(P, mu, nu)
        g = P.optimal_potential(nu)
        s = nu > 0
        Tg = logsumexp_rows(g[None, s], P.m[s])[0] + P.k
        return float(nu[s] @ g[s] - Tg), g
    if isinstance(P, (TransferSet, PointMap)):
        if P.value(mu, nu) == INF:
            raise PrimalInfinite("pair is not feasible for the transfer")
        return 0.0, np.zeros(P.n)
    raise InvalidInput(f"unsupported transfer {P!r}")


def legendre_value(P: CostOT, mu, g, tol: float = 1e-9) -> float:
    """``max_σ <σ, g> - 𝒯(μ, σ)`` by LP over couplings with first marginal ``μ``."""
    mu = as_prob(mu, P.n)
    g = np.asarray(g, dtype=float)
    n = P.n
    idx = np.argwhere(np.isfinite(P.A))
    nv = len(idx)
    Aeq = np.zeros((n, nv))
    Aeq[idx[:, 0], np.arange(nv)] = 1.0
    cost = P.A[idx[:, 0], idx[:, 1]] - g[idx[:, 1]]
    res = linprog(cost, A_eq=Aeq, b_eq=mu, tol=tol)
    return -res.fun


def transfer_convolve(P1: CostOT, P2: CostOT, mu, nu, tol: float = 1e-9) -> float:
    """``min_σ 𝒯₁(μ, σ) + 𝒯₂(σ, ν)`` as one LP over both couplings."""
    if not (isinstance(P1, CostOT) and isinstance(P2, CostOT)):
        raise InvalidInput("joint LP is available for cost transfers only")
    if P1.n != P2.n:
        raise DimensionMismatch("transfers act on different spaces")
    mu, nu = _probs(P1, mu, nu)
    n = P1.n
    i1 = np.argwhere(np.isfinite(P1.A))
    i2 = np.argwhere(np.isfinite(P2.A))
    n1, n2 = len(i1), len(i2)
    Aeq = np.zeros((3 * n, n1 + n2))
    Aeq[i1[:, 0], np.arange(n1)] = 1.0                 # first marginal of π₁ = μ
    Aeq[n + i1[:, 1], np.arange(n1)] = 1.0             # second marginal of π₁ ...
    Aeq[n + i2[:, 0], n1 + np.arange(n2)] = -1.0       # ... equals first of π₂
    Aeq[2 * n + i2[:, 1], n1 + np.arange(n2)] = 1.0    # second marginal of π₂ = ν
    beq = np.concatenate([mu, np.zeros(n), nu])
    cost = np.concatenate([P1.A[i1[:, 0], i1[:, 1]], P2.A[i2[:, 0], i2[:, 1]]])
    try:
        return linprog(cost, A_eq=Aeq, b_eq=beq, tol=tol).fun
    except Infeasible:
        return INF


def _eventual_cycle(F, x):
    seen = {}
    path = []
    while x not in seen:
        seen[x] = len(path)
        path.append(x)
        x = int(F[x])
    return path[seen[x]:]


def point_map_weak_kam(F, g):
    """Weak KAM solution of a point-map transfer.

    ``ĝ(x)`` is the maximum of ``g`` along the forward orbit of ``x``; its
    values decrease along ``F`` and settle on the eventual cycle, so the
    limit ``h(x) = lim ĝ(F^n x)`` is the maximum of ``g`` over that cycle.
    Returns ``(h, g_hat)``.
    """
    F = np.asarray(F, dtype=int)
    g = np.asarray(g, dtype=float)
    n = F.shape[0]
    g_hat = np.empty(n)
    h = np.empty(n)
    for x in range(n):
        orbit = []
        seen = set()
        y = x
        while y not in seen:
            seen.add(y)
            orbit.append(y)
            y = int(F[y])
        g_hat[x] = g[orbit].max()
        h[x] = g[_eventual_cycle(F, x)].max()
    return h, g_hat
