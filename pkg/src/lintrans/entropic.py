"""Entropic operators, log-domain Sinkhorn, and the Markov log-semigroup.

``Entropic(C, ν, ε)`` maps ``g`` to ``ε log Σ_y ν(y) exp((g(y) - C(x, y))/ε)``,
a smoothed version of the max-plus operator of ``C`` that it approaches as
``ε → 0``.  Sinkhorn's algorithm alternates two such operators.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Entropic, _stochastic, logsumexp_rows
from .errors import AbsoluteContinuityViolated, InvalidInput, NoConvergence
from .mather import Coupling, as_prob
from .minplus import reachability

EntropicOp = Entropic


def entropic_apply(op: Entropic, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if not np.isfinite(g).all():
        raise InvalidInput("entropic operators act on finite potentials")
    return op(g)


def maxplus_limit(C, g) -> np.ndarray:
    """``max_y g(y) - C(x, y)``, the ε → 0 limit."""
    return (np.asarray(g, float)[None, :] - np.asarray(C, float)).max(axis=1)


def sandwich(op: Entropic, g):
    """``(lower, value, upper)`` with ``lower = limit + ε log min ν`` and
    ``upper = limit``; the minimum runs over the support of ``ν``."""
    keep = op.nu > 0
    lim = maxplus_limit(op.C[:, keep], np.asarray(g, float)[keep])
    return lim + op.eps * np.log(op.nu[keep].min()), op(g), lim


def osc(u) -> float:
    """Oscillation seminorm ``(max u - min u) / 2``."""
    u = np.asarray(u, dtype=float)
    return float(u.max() - u.min()) / 2.0


@dataclass
class SinkhornResult:
    phi: np.ndarray
    psi: np.ndarray
    coupling: Coupling
    iterations: int
    kappa: float
    residual: float

    @property
    def contracting(self) -> bool:
        return self.kappa < 1.0


def _coupling(C, mu, nu, eps, phi, psi):
    L = (phi[:, None] + psi[None, :] - C) / eps
    return np.outer(mu, nu) * np.exp(L)


def sinkhorn_solve(C, mu, nu, eps: float, tol: float = 1e-9,
                   max_iter: int = 100000) -> SinkhornResult:
    """Log-domain Sinkhorn iteration.

    ``φ = -T_ν ψ`` and ``ψ = -T_μ* φ`` are alternated, where ``T_μ*`` uses
    the transposed cost.  The column marginal is exact after every sweep;
    iteration stops once the row marginal is within ``tol`` in ℓ¹.

    ``kappa`` is the largest observed ratio ``osc(Δψ_{k+1}) / osc(Δψ_k)``
    between consecutive updates, skipping updates already at round-off level.
    """
    C = np.asarray(C, dtype=float)
    mu = as_prob(mu, C.shape[0])
    nu = as_prob(nu, C.shape[1])
    if (mu <= 0).any() or (nu <= 0).any():
        raise InvalidInput("Sinkhorn needs full-support marginals")
    if eps <= 0:
        raise InvalidInput("ε must be positive")
    T_nu = Entropic(C, nu, eps)
    T_mu = Entropic(C.T, mu, eps)
    floor = 1e-11 * (1.0 + float(np.abs(C).max()))
    psi = np.zeros(C.shape[1])
    prev_delta = None
    kappa = 0.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        phi = -T_nu(psi)
        new_psi = -T_mu(phi)
        delta = osc(new_psi - psi)
        if prev_delta is not None and prev_delta > floor and delta > floor:
            kappa = max(kappa, delta / prev_delta)
        prev_delta = delta
        psi = new_psi
        pi = _coupling(C, mu, nu, eps, phi, psi)
        residual = float(np.abs(pi.sum(axis=1) - mu).sum() + np.abs(pi.sum(axis=0) - nu).sum())
        if residual <= tol:
            return SinkhornResult(phi, psi, Coupling.from_matrix(pi), it, kappa, residual)
    raise NoConvergence(f"Sinkhorn stopped at marginal residual {residual:.3e}",
                        residual=residual, iterations=max_iter)


def contraction_estimate(op, pairs) -> float:
    """``max osc(T g₁ - T g₂) / osc(g₁ - g₂)`` over the given pairs."""
    best = 0.0
    for g1, g2 in pairs:
        d = osc(np.asarray(g1) - np.asarray(g2))
        if d > 0:
            best = max(best, osc(op(g1) - op(g2)) / d)
    return best


def composition_contraction(C, mu, nu, eps: float, samples: int = 200, seed: int = 0):
    """Measured factors ``(κ̂(μ), κ̂(ν), κ̂(T_ν ∘ T_μ))``.

    ``κ̂(μ)`` is measured on random pairs, ``κ̂(ν)`` on their images under
    ``T_μ``, so the product bound holds pair by pair.
    """
    C = np.asarray(C, dtype=float)
    rng = np.random.default_rng(seed)
    T_mu = Entropic(C.T, as_prob(mu, C.shape[0]), eps)
    T_nu = Entropic(C, as_prob(nu, C.shape[1]), eps)
    n = C.shape[0]
    pairs = [(rng.uniform(-10, 10, n), rng.uniform(-10, 10, n)) for _ in range(samples)]
    images = [(T_mu(a), T_mu(b)) for a, b in pairs]
    k_mu = contraction_estimate(T_mu, pairs)
    k_nu = contraction_estimate(T_nu, images)
    k_comp = contraction_estimate(lambda g: T_nu(T_mu(g)), pairs)
    return k_mu, k_nu, k_comp


# --- Markov semigroup --------------------------------------------------------

def _period(P) -> int:
    """Period of an irreducible chain: gcd of level differences along edges."""
    from math import gcd
    n = P.shape[0]
    level = [-1] * n
    level[0] = 0
    order = [0]
    for u in order:
        for v in np.flatnonzero(P[u] > 0):
            if level[v] < 0:
                level[v] = level[u] + 1
                order.append(int(v))
    g = 0
    for u in range(n):
        for v in np.flatnonzero(P[u] > 0):
            g = gcd(g, abs(level[u] + 1 - level[v]))
    return g


class MarkovSemigroup:
    """``T_t f = log(P^t e^f)`` with stationary distribution ``m``."""

    def __init__(self, P, tol: float = 1e-13, max_iter: int = 1_000_000):
        P = _stochastic(P)
        self.P = P
        self.n = P.shape[0]
        self.irreducible = bool(reachability(np.where(P > 0, 0.0, np.inf)).all())
        self.period = _period(P) if self.irreducible else None
        lazy = 0.5 * (P + np.eye(self.n))
        m = np.full(self.n, 1.0 / self.n)
        for _ in range(max_iter):
            nxt = m @ lazy
            nxt /= nxt.sum()
            if np.abs(nxt - m).sum() <= tol:
                m = nxt
                break
            m = nxt
        self.m = m
        self.stationarity_residual = float(np.abs(m @ P - m).sum())
        if self.stationarity_residual > 1e-10:
            raise NoConvergence("stationary distribution did not converge",
                                residual=self.stationarity_residual, iterations=max_iter)

    @property
    def aperiodic(self) -> bool:
        return self.period == 1

    def step(self, f):
        f = np.asarray(f, dtype=float)
        mx = f.max()
        return mx + np.log(self.P @ np.exp(f - mx))

    def apply(self, f, t: int):
        f = np.asarray(f, dtype=float)
        if t < 0:
            raise InvalidInput("t must be nonnegative")
        for _ in range(t):
            f = self.step(f)
        return f

    def limit(self, f):
        """``T_∞ f = log <m, e^f> 1``."""
        v = logsumexp_rows(np.asarray(f, float)[None, :], self.m)[0]
        return np.full(self.n, v)

    def time_to_limit(self, f, tol: float = 1e-10, max_t: int = 100000):
        """First ``t`` with ``‖T_t f - T_∞ f‖∞ <= tol`` and the error there."""
        if not (self.irreducible and self.aperiodic):
            raise InvalidInput("limit operator needs an irreducible aperiodic chain")
        target = self.limit(f)
        g = np.asarray(f, dtype=float)
        for t in range(max_t + 1):
            err = float(np.abs(g - target).max())
            if err <= tol:
                return t, err
            g = self.step(g)
        raise NoConvergence(f"T_t f still {err:.3e} from the limit", residual=err, iterations=max_t)


def markov_semigroup_apply(S: MarkovSemigroup, f, t: int):
    return S.apply(f, t)


@dataclass
class SchrodingerDuality:
    lp_value: float
    kl_value: float
    potential: np.ndarray

    @property
    def gap(self) -> float:
        return abs(self.lp_value - self.kl_value)


def schrodinger_duality(S, nu) -> SchrodingerDuality:
    """Dual value at ``f* = log(ν/m)`` against the closed-form ``KL(ν ‖ m)``.

    ``S`` may be a :class:`MarkovSemigroup` or a stationary vector ``m``.
    """
    m = S.m if isinstance(S, MarkovSemigroup) else as_prob(S)
    nu = as_prob(nu, m.shape[0])
    s = nu > 0
    if (m[s] <= 0).any():
        raise AbsoluteContinuityViolated("ν charges a point where m vanishes")
    f = np.full(m.shape[0], -np.inf)
    f[s] = np.log(nu[s]) - np.log(m[s])
    lp = float(nu[s] @ f[s]) - float(logsumexp_rows(f[None, s], m[s])[0])
    kl = float(np.sum(nu[s] * np.log(nu[s] / m[s])))
    return SchrodingerDuality(lp, kl, f)


def dual_objective(m, nu, f) -> float:
    """``<f, ν> - log <m, e^f>`` for finite ``f``; never exceeds ``KL(ν ‖ m)``."""
    f = np.asarray(f, dtype=float)
    return float(np.asarray(nu) @ f) - float(logsumexp_rows(f[None, :], np.asarray(m))[0])
