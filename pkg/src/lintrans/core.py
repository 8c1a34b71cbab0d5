"""Kantorovich operators on a finite space and their algebra.

An operator maps potentials (length-``n`` vectors) to potentials.  Backward
operators are meant to be monotone, affine on constants and convex; forward
operators are concave instead.  :func:`check_axioms` measures how far a given
operator is from these properties on seeded random samples.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidInput, NoConvergence, NonpositiveScale
from .extreal import INF, is_finite, is_pinf, to_float
from .minplus import backward_apply, forward_apply


def _stochastic(P, tol=1e-12):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"transition matrix must be square, got {P.shape}")
    if (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > tol:
        raise InvalidInput("matrix is not row-stochastic")
    return P


def logsumexp_rows(M, w=None):
    """``log Σ_j w_j exp(M_ij)`` per row, shifted by the row maximum.

    Columns with zero weight are dropped.  Summation order is fixed (numpy
    pairwise over a contiguous row), so results are reproducible.
    """
    M = np.asarray(M, dtype=float)
    if w is not None:
        w = np.asarray(w, dtype=float)
        keep = w > 0
        M = M[:, keep]
        logw = np.log(w[keep])
        M = M + logw[None, :]
    mx = M.max(axis=1)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    return safe + np.log(np.exp(M - safe[:, None]).sum(axis=1))


class KantorovichOp:
    """Base class; subclasses implement :meth:`apply`."""

    kind = "abstract"
    direction = "backward"       # or "forward"
    homogeneous = False          # positively 1-homogeneous

    def __init__(self, n: int):
        self.n = int(n)

    def apply(self, g: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def apply_many(self, G: np.ndarray) -> np.ndarray:
        """Apply to each row of ``G``; kinds override this with a vectorised form."""
        return np.stack([self.apply(g) for g in G])

    def __call__(self, g):
        g = np.asarray(g)
        if g.ndim != 1 or g.shape[0] != self.n:
            raise DimensionMismatch(f"{self.kind} acts on length {self.n}, got {g.shape}")
        return self.apply(g)

    def batch(self, G):
        G = np.asarray(G)
        if G.ndim != 2 or G.shape[1] != self.n:
            raise DimensionMismatch(f"{self.kind} acts on length {self.n}, got rows of {G.shape[1:]}")
        return self.apply_many(G)

    def power(self, g, k: int):
        for _ in range(k):
            g = self(g)
        return g

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class MaxPlusCost(KantorovichOp):
    """``T g(x) = max_y g(y) - A(x, y)``."""
    kind = "max_plus_cost"

    def __init__(self, A):
        A = np.asarray(A)
        super().__init__(A.shape[0])
        self.A = A

    def apply(self, g):
        return backward_apply(self.A, g)

    def apply_many(self, G):
        A = to_float(self.A)
        feas = np.isfinite(A)
        V = np.where(feas[None], G[:, None, :] - np.where(feas, A, 0.0)[None], -INF)
        return V.max(axis=2)


class MinPlusForward(KantorovichOp):
    """``T⁺ f(y) = min_x f(x) + A(x, y)``; concave."""
    kind = "min_plus_forward"
    direction = "forward"

    def __init__(self, A):
        A = np.asarray(A)
        super().__init__(A.shape[0])
        self.A = A

    def apply(self, f):
        return forward_apply(self.A, f)

    def apply_many(self, F):
        A = to_float(self.A)
        feas = np.isfinite(A)
        V = np.where(feas[None], F[:, :, None] + np.where(feas, A, 0.0)[None], INF)
        return V.min(axis=1)


class Entropic(KantorovichOp):
    """``T g(x) = ε log Σ_y ν(y) exp((g(y) - C(x, y)) / ε)``."""
    kind = "entropic"

    def __init__(self, C, nu, eps: float):
        C = np.asarray(C, dtype=float)
        if not np.isfinite(C).all():
            raise InvalidInput("entropic operators need a finite cost")
        if eps <= 0:
            raise NonpositiveScale("ε must be positive")
        nu = np.asarray(nu, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or nu.shape != (C.shape[1],):
            raise DimensionMismatch("entropic operators need a square cost and matching ν")
        if (nu < 0).any() or abs(nu.sum() - 1) > 1e-12:
            raise InvalidInput("ν must be a probability vector")
        super().__init__(C.shape[0])
        self.C, self.nu, self.eps = C, nu, float(eps)

    def _rows(self, D):
        # shift by the max-plus limit: the leading exponent is exactly 0, so
        # the result stays within [limit + ε log min ν, limit] in floating point
        keep = self.nu > 0
        D = D[..., keep]
        lim = D.max(axis=-1)
        s = (self.nu[keep] * np.exp((D - lim[..., None]) / self.eps)).sum(axis=-1)
        return lim + self.eps * np.minimum(np.log(s), 0.0)

    def apply(self, g):
        return self._rows(np.asarray(g, float)[None, :] - self.C)

    def apply_many(self, G):
        return self._rows(G[:, None, :] - self.C[None, :, :])


class Markov(KantorovichOp):
    """``T g = P g`` for a row-stochastic ``P``."""
    kind = "markov"
    homogeneous = True

    def __init__(self, P):
        P = _stochastic(P)
        super().__init__(P.shape[0])
        self.P = P

    def apply(self, g):
        return self.P @ np.asarray(g, dtype=float)

    def apply_many(self, G):
        return G @ self.P.T


class Reduite(KantorovichOp):
    """``T g = g ∨ P g``; iterates increase to the least superharmonic majorant."""
    kind = "reduite"
    homogeneous = True

    def __init__(self, P):
        P = _stochastic(P)
        super().__init__(P.shape[0])
        self.P = P

    def apply(self, g):
        g = np.asarray(g, dtype=float)
        return np.maximum(g, self.P @ g)

    def apply_many(self, G):
        return np.maximum(G, G @ self.P.T)


class FillingScheme(KantorovichOp):
    """``T g = P g⁺ - g⁻``.

    Not affine on constants in general: with ``P`` the swap on two points,
    ``g = (1, -1)`` and ``c = 1`` give ``T(g + c) = (0, 2)`` but
    ``T g + c = (1, 1)``.
    """
    kind = "filling_scheme"
    homogeneous = True

    def __init__(self, P):
        P = _stochastic(P)
        super().__init__(P.shape[0])
        self.P = P

    def apply(self, g):
        g = np.asarray(g, dtype=float)
        return self.P @ np.maximum(g, 0.0) - np.maximum(-g, 0.0)

    def apply_many(self, G):
        return np.maximum(G, 0.0) @ self.P.T - np.maximum(-G, 0.0)


class AffineShift(KantorovichOp):
    """``T g(x) = g(σ(x)) - Ā(x)`` for a self-map ``σ`` of the points."""
    kind = "affine_shift"

    def __init__(self, sigma, Abar):
        sigma = np.asarray(sigma, dtype=int)
        Abar = np.asarray(Abar, dtype=float)
        n = sigma.shape[0]
        if Abar.shape != (n,) or (sigma < 0).any() or (sigma >= n).any():
            raise DimensionMismatch("σ must map {0..n-1} to itself and Ā have length n")
        super().__init__(n)
        self.sigma, self.Abar = sigma, Abar

    def apply(self, g):
        return np.asarray(g, dtype=float)[self.sigma] - self.Abar

    def apply_many(self, G):
        return G[:, self.sigma] - self.Abar[None, :]

    def cost(self):
        A = np.full((self.n, self.n), INF)
        A[np.arange(self.n), self.sigma] = self.Abar
        return A


class ConvexEnergy(KantorovichOp):
    """``T g = (log <m, e^g> + k) 1``: the operator of ``KL(· ‖ m) - k``."""
    kind = "convex_energy"

    def __init__(self, m, k: float = 0.0):
        m = np.asarray(m, dtype=float)
        if (m < 0).any() or abs(m.sum() - 1) > 1e-12:
            raise InvalidInput("reference measure must be a probability vector")
        super().__init__(m.shape[0])
        self.m, self.k = m, float(k)

    def apply(self, g):
        v = logsumexp_rows(np.asarray(g, float)[None, :], self.m)[0] + self.k
        return np.full(self.n, v)

    def apply_many(self, G):
        v = logsumexp_rows(G, self.m) + self.k
        return np.repeat(v[:, None], self.n, axis=1)


class Recession(KantorovichOp):
    """``T_r g(x) = max {g(y) : A(x, y) < +inf}``."""
    kind = "recession"
    homogeneous = True

    def __init__(self, A):
        A = np.asarray(A)
        super().__init__(A.shape[0])
        self.support = ~is_pinf(A)

    def apply(self, g):
        g = np.asarray(g)
        out = np.empty(self.n, dtype=g.dtype)
        for x in range(self.n):
            vals = g[self.support[x]]
            out[x] = max(vals) if vals.size else -INF
        return out

    def apply_many(self, G):
        V = np.where(self.support[None], G[:, None, :], -INF)
        return V.max(axis=2)


class Combinator(KantorovichOp):
    """Pointwise convex combination or maximum of two operators."""
    kind = "combinator"

    def __init__(self, op1, op2, mode: str, lam: float = 0.5):
        if op1.n != op2.n:
            raise DimensionMismatch(f"operators act on {op1.n} and {op2.n} points")
        if op1.direction != op2.direction:
            raise InvalidInput("cannot combine a backward with a forward operator")
        if mode not in ("convex", "max"):
            raise InvalidInput(f"unknown mode {mode!r}")
        if mode == "max" and op1.direction == "forward":
            raise InvalidInput("max of forward operators is not concave; use convex mode")
        if not 0.0 <= lam <= 1.0:
            raise InvalidInput("λ must lie in [0, 1]")
        super().__init__(op1.n)
        self.op1, self.op2, self.mode, self.lam = op1, op2, mode, float(lam)
        self.direction = op1.direction
        self.homogeneous = op1.homogeneous and op2.homogeneous

    def apply(self, g):
        return self._mix(self.op1(g), self.op2(g))

    def apply_many(self, G):
        return self._mix(self.op1.apply_many(G), self.op2.apply_many(G))

    def _mix(self, a, b):
        if self.mode == "max":
            return np.maximum(a, b)
        lam = self.lam
        if lam == 1.0:
            return a
        if lam == 0.0:
            return b
        return lam * to_float(a) + (1 - lam) * to_float(b)


class Scaled(KantorovichOp):
    """``(λ·T) g = T(λ g) / λ``."""
    kind = "scaled"

    def __init__(self, op, lam: float):
        if not lam > 0:
            raise NonpositiveScale(f"scale must be positive, got {lam}")
        super().__init__(op.n)
        self.op, self.lam = op, float(lam)
        self.direction = op.direction
        self.homogeneous = op.homogeneous

    def apply(self, g):
        return self.op(self.lam * np.asarray(g, dtype=float)) / self.lam

    def apply_many(self, G):
        return self.op.apply_many(self.lam * G) / self.lam


class Composed(KantorovichOp):
    """``T₁ ∘ T₂``."""
    kind = "composed"

    def __init__(self, op1, op2):
        if op1.n != op2.n:
            raise DimensionMismatch(f"operators act on {op1.n} and {op2.n} points")
        if op1.direction != op2.direction:
            raise InvalidInput("cannot compose a backward with a forward operator")
        super().__init__(op1.n)
        self.op1, self.op2 = op1, op2
        self.direction = op1.direction
        self.homogeneous = op1.homogeneous and op2.homogeneous

    def apply(self, g):
        return self.op1(self.op2(g))

    def apply_many(self, G):
        return self.op1.apply_many(self.op2.apply_many(G))


def combine(op1, op2, mode: str = "convex", lam: float = 0.5) -> KantorovichOp:
    """``λ T₁ + (1-λ) T₂`` (``mode="convex"``) or ``T₁ ∨ T₂`` (``mode="max"``)."""
    return Combinator(op1, op2, mode, lam)


def scale(op, lam: float) -> KantorovichOp:
    """``(λ·T) g = T(λ g) / λ``; the identity on 1-homogeneous kinds."""
    if not lam > 0:
        raise NonpositiveScale(f"scale must be positive, got {lam}")
    if op.homogeneous or lam == 1:
        return op
    if isinstance(op, MaxPlusCost):
        return MaxPlusCost(np.asarray(op.A, dtype=float) / lam)
    if isinstance(op, Scaled):
        return Scaled(op.op, op.lam * lam)
    return Scaled(op, lam)


def compose(op1, op2) -> KantorovichOp:
    return Composed(op1, op2)


# --- axiom checker -----------------------------------------------------------

_GRID = 2.0 ** -16
_FIXED_LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class AxiomReport:
    kind: str
    trials: int
    monotone: float = 0.0
    affine: float = 0.0
    convexity: float = 0.0
    lipschitz: float = 0.0
    tol: float = 1e-9
    witnesses: dict = field(default_factory=dict)

    @property
    def max_violation(self) -> float:
        return max(self.monotone, self.affine, self.convexity, self.lipschitz)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def as_dict(self):
        return {"kind": self.kind, "trials": self.trials, "monotone": self.monotone,
                "affine": self.affine, "convexity": self.convexity,
                "lipschitz": self.lipschitz, "max_violation": self.max_violation,
                "passed": self.passed}


def _dyadic(rng, size, lo=-10.0, hi=10.0):
    # quantised samples keep sums and λ-mixtures exact in binary floating point
    return np.round(rng.uniform(lo, hi, size) / _GRID) * _GRID


def _pos_gap_rows(a, b):
    """Per-row max of (a - b)^+; equal infinities count as equal."""
    a = to_float(a)
    b = to_float(b)
    with np.errstate(invalid="ignore"):
        d = np.where(a == b, 0.0, a - b)
    d = np.nan_to_num(d, nan=INF)
    return np.maximum(d.max(axis=1), 0.0)


def check_axioms(op: KantorovichOp, trials: int = 1000, seed: int = 0,
                 tol: float = 1e-9) -> AxiomReport:
    """Largest violation of each Kantorovich axiom over random samples.

    Each trial draws ``g₁, g₂`` with entries uniform in ``[-10, 10]``, a
    constant in the same range, and checks convexity (concavity for forward
    operators) at λ in {0, 1/4, 1/2, 3/4, 1} and one random λ.  Samples are
    quantised to multiples of 2⁻¹⁶.
    """
    if trials < 1:
        raise InvalidInput("trials must be positive")
    n = op.n
    rng = np.random.default_rng(seed)
    G1 = _dyadic(rng, (trials, n))
    G2 = _dyadic(rng, (trials, n))
    C = _dyadic(rng, (trials, 1))
    lam_r = np.round(rng.uniform(size=(trials, 1)) / _GRID) * _GRID
    rep = AxiomReport(kind=op.kind, trials=trials, tol=tol)
    T1, T2 = to_float(op.batch(G1)), to_float(op.batch(G2))

    def record(name, per_row, witness):
        i = int(np.argmax(per_row))
        if per_row[i] > getattr(rep, name):
            setattr(rep, name, float(per_row[i]))
            rep.witnesses[name] = witness(i)

    lo, hi = np.minimum(G1, G2), np.maximum(G1, G2)
    record("monotone", _pos_gap_rows(op.batch(lo), op.batch(hi)), lambda i: (lo[i], hi[i]))

    shifted = to_float(op.batch(G1 + C))
    aff = np.maximum(_pos_gap_rows(shifted, T1 + C), _pos_gap_rows(T1 + C, shifted))
    record("affine", aff, lambda i: (G1[i], float(C[i, 0])))

    for lam in _FIXED_LAMBDAS + (None,):
        L = lam_r if lam is None else np.full((trials, 1), lam)
        mix = op.batch(L * G1 + (1 - L) * G2)
        if lam == 1.0:
            chord = T1
        elif lam == 0.0:
            chord = T2
        else:
            chord = L * T1 + (1 - L) * T2
        v = _pos_gap_rows(chord, mix) if op.direction == "forward" else _pos_gap_rows(mix, chord)
        record("convexity", v, lambda i, L=L: (G1[i], G2[i], float(L[i, 0])))

    dist = np.abs(G1 - G2).max(axis=1)
    fa, fb = np.isfinite(T1), np.isfinite(T2)
    with np.errstate(invalid="ignore"):
        diff = np.where(fa & fb, np.abs(T1 - T2), 0.0)
    lip = diff.max(axis=1) - dist
    lip[(fa != fb).any(axis=1)] = INF
    record("lipschitz", np.maximum(lip, 0.0), lambda i: (G1[i], G2[i]))
    return rep


# --- reduite and filling scheme ---------------------------------------------

def reduite_fixed_point(P, g, tol: float = 1e-12, max_iter: int = 100000) -> np.ndarray:
    """Least ``P``-superharmonic majorant of ``g`` by iterating ``g ∨ P g``."""
    P = _stochastic(P)
    h = np.asarray(g, dtype=float)
    if h.shape != (P.shape[0],):
        raise DimensionMismatch("potential does not match the transition matrix")
    if not np.isfinite(h).all():
        raise InvalidInput("réduite needs a finite potential")
    res = INF
    for _ in range(max_iter):
        nxt = np.maximum(h, P @ h)
        res = float(np.max(nxt - h))
        h = nxt
        if res <= tol:
            return h
    raise NoConvergence(f"réduite iteration stalled at residual {res:.3e}",
                        residual=res, iterations=max_iter)


def filling_scheme_iterate(P, g, n: int, invariant=None) -> list:
    """``[g, T g, ..., T^n g]`` with ``T g = P g⁺ - g⁻``.

    With a ``P``-invariant probability ``invariant`` the integrals
    ``<μ, T^k g>`` are checked to be nonincreasing to 1e-12.
    """
    op = FillingScheme(P)
    g = np.asarray(g, dtype=float)
    if not np.isfinite(g).all():
        raise InvalidInput("filling scheme needs a finite potential")
    seq = [op(g)]
    seq.insert(0, g)
    for _ in range(n - 1):
        seq.append(op(seq[-1]))
    if invariant is not None:
        mu = np.asarray(invariant, dtype=float)
        vals = [float(mu @ s) for s in seq]
        for a, b in zip(vals, vals[1:]):
            if b > a + 1e-12:
                raise AssertionError(f"integral increased from {a} to {b}")
    return seq[: n + 1]
