"""Tropical (min-plus) matrix algebra on extended-real cost matrices.

A cost matrix ``A`` with ``A[x, y] = c(x, y)`` acts on potentials through the
backward and forward operators

    T⁻g(x) = max_y g(y) - A(x, y),      T⁺f(y) = min_x f(x) + A(x, y),

and two costs compose by inf-convolution ``(A ⋆ B)(x, y) = min_z A(x, z) + B(z, y)``.
Pairs with ``A = +inf`` are infeasible and never contribute, which is why
``g(y) = -inf`` against ``A(x, y) = +inf`` is not an indeterminate sum here.

All functions accept float arrays or exact object arrays (see
:mod:`lintrans.extreal`) and return the same representation.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidInput, NegativeCycle
from .extreal import INF, NINF, as_cost, is_exact, is_finite, is_pinf


def identity(n: int, *, exact: bool = False) -> np.ndarray:
    """Min-plus identity: zero diagonal, +inf elsewhere."""
    if exact:
        from fractions import Fraction
        E = np.full((n, n), INF, dtype=object)
        for i in range(n):
            E[i, i] = Fraction(0)
        return E
    E = np.full((n, n), INF)
    np.fill_diagonal(E, 0.0)
    return E


def _check_square(A, B=None):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if B is not None and B.shape != A.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")


def _common(A, B):
    if is_exact(A) != is_exact(B):
        from .extreal import to_exact
        return to_exact(A), to_exact(B)
    return A, B


def backward_apply(A, g) -> np.ndarray:
    """``(T⁻g)(x) = max_y g(y) - A(x, y)``.

    A row of ``A`` that is entirely +inf yields -inf (the sup over an empty
    set of feasible targets).
    """
    A = np.asarray(A)
    g = np.asarray(g)
    if A.ndim != 2 or g.ndim != 1 or A.shape[1] != g.shape[0]:
        raise DimensionMismatch(f"cost {A.shape} cannot act on potential of length {g.shape}")
    A, g = _common(A, g)
    feasible = ~is_pinf(A)
    zero = A.dtype.type(0) if A.dtype != object else 0
    V = np.where(feasible, g[None, :] - np.where(feasible, A, zero), NINF)
    return V.max(axis=1)


def forward_apply(A, f) -> np.ndarray:
    """``(T⁺f)(y) = min_x f(x) + A(x, y)``."""
    A = np.asarray(A)
    f = np.asarray(f)
    if A.ndim != 2 or f.ndim != 1 or A.shape[0] != f.shape[0]:
        raise DimensionMismatch(f"cost {A.shape} cannot act on potential of length {f.shape}")
    A, f = _common(A, f)
    feasible = ~is_pinf(A)
    zero = A.dtype.type(0) if A.dtype != object else 0
    V = np.where(feasible, f[:, None] + np.where(feasible, A, zero), INF)
    return V.min(axis=0)


def convolve(A, B) -> np.ndarray:
    """Inf-convolution ``(A ⋆ B)(x, y) = min_z A(x, z) + B(z, y)``."""
    A = np.asarray(A)
    B = np.asarray(B)
    _check_square(A, B)
    A, B = _common(A, B)
    return (A[:, :, None] + B[None, :, :]).min(axis=1)


def power(A, n: int, *, allow_identity: bool = False) -> np.ndarray:
    """n-fold inf-convolution ``A_n`` by binary exponentiation.

    ``n = 0`` returns the min-plus identity only when ``allow_identity``
    is set.
    """
    A = np.asarray(A)
    _check_square(A)
    if n < 0 or (n == 0 and not allow_identity):
        raise InvalidInput(f"power requires n >= 1, got {n}")
    if n == 0:
        return identity(A.shape[0], exact=is_exact(A))
    result = None
    base = A
    while n:
        if n & 1:
            result = base if result is None else convolve(result, base)
        n >>= 1
        if n:
            base = convolve(base, base)
    return result


def powers(A, N: int) -> list:
    """``[A_1, ..., A_N]`` by repeated convolution with ``A``."""
    out = [np.asarray(A)]
    for _ in range(N - 1):
        out.append(convolve(out[-1], A))
    return out


def _trace_cycle(nxt, start, n):
    """Follow successor pointers from ``start`` and return the first closed loop."""
    seen = {}
    walk = []
    v = start
    for _ in range(2 * n + 2):
        if v in seen:
            return walk[seen[v]:]
        seen[v] = len(walk)
        walk.append(v)
        v = int(nxt[v])
    return walk


def kleene_plus(B, *, tol: float = 0.0) -> np.ndarray:
    """``B⁺ = min_{n>=1} B_n`` via Floyd-Warshall, O(n³).

    Raises :class:`NegativeCycle` with a witness cycle when some cycle of
    ``B`` has total weight below ``-tol``.  Cycles with weight in
    ``[-tol, 0)`` are accepted as round-off in float mode.
    """
    B = np.asarray(B)
    _check_square(B)
    n = B.shape[0]
    D = B.copy()
    nxt = np.where(is_pinf(B), -1, np.arange(n)[None, :])
    for k in range(n):
        cand = D[:, k, None] + D[None, k, :]
        better = cand < D
        if better.any():
            D = np.where(better, cand, D)
            nxt = np.where(better, nxt[:, k, None], nxt)
        if D[k, k] < -tol:
            break
    diag = np.array([D[i, i] for i in range(n)], dtype=object if is_exact(D) else float)
    bad = np.flatnonzero(diag < -tol)
    if bad.size:
        z = int(bad[0])
        cyc = _trace_cycle(_successor_along(nxt, z), z, n)
        weight = sum((B[cyc[i], cyc[(i + 1) % len(cyc)]] for i in range(len(cyc))), 0)
        raise NegativeCycle(f"cycle {cyc} has negative weight {float(weight):.6g}",
                            cycle=cyc, weight=weight)
    return D


def _successor_along(nxt, z):
    # next hop from every node on the current best path towards z
    return np.array([nxt[v, z] if nxt[v, z] >= 0 else v for v in range(nxt.shape[0])])


def reachability(A) -> np.ndarray:
    """Boolean reflexive-transitive closure of the finite-entry graph of ``A``."""
    R = np.asarray(is_finite(A), dtype=bool) | np.eye(np.asarray(A).shape[0], dtype=bool)
    n = R.shape[0]
    for k in range(n):
        R |= R[:, k, None] & R[None, k, :]
    return R


def strongly_connected(A) -> bool:
    return bool(reachability(A).all())


def scc_labels(A) -> np.ndarray:
    """Strongly connected component label per node (lowest member index)."""
    R = reachability(A)
    both = R & R.T
    return np.array([int(np.flatnonzero(both[i])[0]) for i in range(R.shape[0])])
