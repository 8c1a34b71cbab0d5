"""Ergodic optimisation on subshifts of finite type, truncated at depth k.

Points are admissible sequences ``x = x0 x1 ...`` for a 0/1 transition
matrix ``M``.  A potential of depth ``k`` is a function of the window
``(x0, ..., x_k)``, i.e. ``Ā(x) = A(x0, σx)`` with ``A(y, x)`` depending on
``y`` and the first ``k`` symbols of ``x``.  Nodes of the cylinder graph are
admissible k-words; the (k+1)-word ``u`` is an edge from ``u[:k]`` to
``u[1:]`` carrying weight ``A(u)``.  Periodic orbits are exactly cycles, so
cycle means reproduce orbit averages of ``Ā`` without truncation error.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DeadState, InvalidInput
from .extreal import INF, is_finite, to_exact, to_float
from .lp import linprog
from .mather import mather_constant_cycle
from .minplus import backward_apply, forward_apply


def _word_key(w) -> str:
    return "".join(str(s) for s in w)


def _potential_fn(potential, r: int, k: int):
    if callable(potential):
        return lambda w: float(potential(tuple(w)))
    if isinstance(potential, dict):
        table = {str(key): float(v) for key, v in potential.items()}

        def look(w):
            key = _word_key(w)
            if key not in table:
                raise InvalidInput(f"potential table has no entry for word {key!r}")
            return table[key]
        return look
    arr = np.asarray(potential, dtype=float)
    if arr.shape == (r,) * (k + 1):
        return lambda w: float(arr[tuple(w)])
    flat = arr.ravel()
    if flat.size == r ** (k + 1):
        # lexicographic order over all (k+1)-words
        return lambda w: float(flat[int(np.ravel_multi_index(tuple(w), (r,) * (k + 1)))])
    raise InvalidInput(f"potential table has shape {arr.shape}; expected {(r,) * (k + 1)}")


@dataclass
class SftGraph:
    M: np.ndarray
    k: int
    nodes: list                      # admissible k-words (tuples)
    edges: list                      # (tail index, head index, (k+1)-word)
    weights: np.ndarray              # one per edge
    potential: object = field(repr=False, default=None)

    @property
    def r(self) -> int:
        return self.M.shape[0]

    @property
    def index(self) -> dict:
        return {w: i for i, w in enumerate(self.nodes)}

    def cost_matrix(self, sense: str = "min", exact: bool = False) -> np.ndarray:
        """Node-by-node cost; ``sense="max"`` negates the weights."""
        n = len(self.nodes)
        sign = 1.0 if sense == "min" else -1.0
        if exact:
            W = to_exact(self.weights)
            C = np.full((n, n), INF, dtype=object)
            for (a, b, _), w in zip(self.edges, W):
                C[a, b] = w if sign > 0 else -w
            return C
        C = np.full((n, n), INF)
        for (a, b, _), w in zip(self.edges, self.weights):
            C[a, b] = sign * w
        return C


def _admissible(M, length):
    r = M.shape[0]
    words = [(s,) for s in range(r)]
    for _ in range(length - 1):
        words = [w + (s,) for w in words for s in range(r) if M[w[-1], s]]
    return words


def build_sft(M, k: int, potential) -> SftGraph:
    """Cylinder graph of depth ``k`` with edge weights from ``potential``."""
    M = np.asarray(M, dtype=int)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or not np.isin(M, (0, 1)).all():
        raise InvalidInput("transition matrix must be square 0/1")
    if k < 1:
        raise InvalidInput("depth must be at least 1")
    r = M.shape[0]
    dead = [str(s) for s in range(r) if not M[s].any() or not M[:, s].any()]
    if dead:
        raise DeadState(f"symbols without successor or predecessor: {dead}", words=dead)
    pot = _potential_fn(potential, r, k)
    nodes = _admissible(M, k)
    index = {w: i for i, w in enumerate(nodes)}
    edges, weights = [], []
    for u in _admissible(M, k + 1):
        edges.append((index[u[:k]], index[u[1:]], u))
        weights.append(pot(u))
    weights = np.asarray(weights, dtype=float)
    if not np.isfinite(weights).all():
        raise InvalidInput("potential must be finite")
    outdeg = np.bincount([e[0] for e in edges], minlength=len(nodes))
    indeg = np.bincount([e[1] for e in edges], minlength=len(nodes))
    bad = [_word_key(nodes[i]) for i in range(len(nodes)) if outdeg[i] == 0 or indeg[i] == 0]
    if bad:
        raise DeadState(f"words without extension: {bad}", words=bad)
    return SftGraph(M=M, k=k, nodes=nodes, edges=edges, weights=weights, potential=pot)


def refine(G: SftGraph) -> SftGraph:
    """The same potential on the depth-(k+1) cylinder graph."""
    pot = G.potential
    k = G.k
    return build_sft(G.M, k + 1, lambda w: pot(w[: k + 1]))


def _sign(sense):
    if sense not in ("min", "max"):
        raise InvalidInput(f"sense must be 'min' or 'max', got {sense!r}")
    return 1.0 if sense == "min" else -1.0


def ergodic_value(G: SftGraph, sense: str = "min", exact: bool = False):
    """Optimal orbit average, as ``(value, cycle of node words)``."""
    sign = _sign(sense)
    c, cyc = mather_constant_cycle(G.cost_matrix(sense, exact=exact))
    return sign * c, [G.nodes[i] for i in cyc]


@dataclass
class HolonomicResult:
    value: float
    measure: dict          # (k+1)-word -> mass
    dual_value: float
    potential: np.ndarray  # dual maximiser f on nodes

    @property
    def gap(self) -> float:
        return abs(self.value - self.dual_value)


def _balance_lp(n_nodes, tails, heads, costs, tol):
    """min <costs, μ> over μ >= 0, Σμ = 1, Σ μ (1[tail=w] - 1[head=w]) = 0.

    Returns (value, μ, dual value, f) with the dual solved as its own LP:
    max t s.t. t <= costs(e) + f(tail e) - f(head e).
    """
    E = len(costs)
    Aeq = np.zeros((n_nodes + 1, E))
    np.add.at(Aeq, (tails, np.arange(E)), 1.0)
    np.add.at(Aeq, (heads, np.arange(E)), -1.0)
    Aeq[n_nodes] = 1.0
    beq = np.zeros(n_nodes + 1)
    beq[n_nodes] = 1.0
    primal = linprog(costs, A_eq=Aeq, b_eq=beq, tol=tol)

    # variables (f_0..f_{n-1}, t), all free; minimise -t
    Aub = np.zeros((E, n_nodes + 1))
    np.add.at(Aub, (np.arange(E), tails), -1.0)
    np.add.at(Aub, (np.arange(E), heads), 1.0)
    Aub[:, n_nodes] = 1.0
    cost = np.zeros(n_nodes + 1)
    cost[n_nodes] = -1.0
    free = np.ones(n_nodes + 1, dtype=bool)
    dual = linprog(cost, A_ub=Aub, b_ub=costs, free=free, tol=tol)
    return primal.fun, np.clip(primal.x, 0.0, None), -dual.fun, dual.x[:n_nodes]


def holonomic_lp(G: SftGraph, sense: str = "min", tol: float = 1e-9) -> HolonomicResult:
    """Optimal holonomic edge measure and the dual subaction LP."""
    sign = _sign(sense)
    tails = np.array([e[0] for e in G.edges])
    heads = np.array([e[1] for e in G.edges])
    val, mu, dval, f = _balance_lp(len(G.nodes), tails, heads, sign * G.weights, tol)
    meas = {_word_key(e[2]): float(m) for e, m in zip(G.edges, mu) if m > 1e-12}
    return HolonomicResult(sign * val + 0.0, meas, sign * dval + 0.0, f)


@dataclass
class SubactionResult:
    h: np.ndarray               # backward solution on nodes, -inf off the basin
    c: object                   # Mather constant of the (signed) node cost
    psi: np.ndarray             # forward conjugate, the τ-form solution
    sigma_residual: float
    tau_residual: float
    aubry: list
    value: float                # optimal average in the requested sense


def subaction(G: SftGraph, sense: str = "min") -> SubactionResult:
    """Calibrated subaction in exact rational arithmetic.

    σ-form: ``h(w) = max_{w -> w'} h(w') - A(w w') + c`` on finite nodes.
    τ-form: ``ψ(w') = min_{w -> w'} ψ(w) + A(w w') - c`` for ``ψ = T∞⁺ h``.
    For ``sense="max"`` both identities refer to the negated potential.
    """
    from .weakkam import ext_residual, weak_kam_bundle

    sign = _sign(sense)
    C = G.cost_matrix(sense, exact=True)
    b = weak_kam_bundle(C, exact=True)
    h = b.h
    fin = is_finite(h)
    Th = backward_apply(C, h)
    sres = ext_residual((Th + b.c)[fin], h[fin]) if fin.any() else 0.0
    psi = forward_apply(b.A_inf, h)
    pfin = is_finite(psi)
    Tp = forward_apply(C, psi)
    tres = ext_residual((Tp - b.c)[pfin], psi[pfin]) if pfin.any() else 0.0
    return SubactionResult(h=h, c=b.c, psi=psi, sigma_residual=sres, tau_residual=tres,
                           aubry=[G.nodes[i] for i in b.aubry], value=sign * float(b.c))


@dataclass
class StochasticResult:
    primal: float
    dual: float
    measure: dict

    @property
    def gap(self) -> float:
        return abs(self.primal - self.dual)


def stochastic_holonomic_lp(G: SftGraph, tol: float = 1e-9) -> StochasticResult:
    """LP over (k+2)-windows ``v = (y, x0, ..., x_k)`` with the constraint
    ``Σ μ(v) (f(v[:k]) - f(v[2:])) = 0`` for every node function ``f``.

    ``v[:k]`` is the node of ``τ_y x`` and ``v[2:]`` that of ``σ x``; the
    cost is ``A(v[:k+1])``.
    """
    k = G.k
    index = G.index
    windows = _admissible(G.M, k + 2)
    tails = np.array([index[v[:k]] for v in windows])
    heads = np.array([index[v[2:]] for v in windows])
    costs = np.array([G.potential(v[: k + 1]) for v in windows])
    val, mu, dval, _ = _balance_lp(len(G.nodes), tails, heads, costs, tol)
    meas = {_word_key(v): float(m) for v, m in zip(windows, mu) if m > 1e-12}
    return StochasticResult(val + 0.0, dval + 0.0, meas)


def all_words(r: int, length: int):
    return list(itertools.product(range(r), repeat=length))


def as_float(h) -> np.ndarray:
    return to_float(np.asarray(h))
