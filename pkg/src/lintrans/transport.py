"""Transportation simplex (u-v method) for balanced problems with finite costs.

The basis is a spanning tree on row and column nodes with ``m + n - 1``
cells, started from the north-west corner rule.  Each pivot prices all
cells against the tree potentials, enters the most negative reduced cost
and moves flow around the unique cycle it closes.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, LPError


@dataclass
class TransportResult:
    plan: np.ndarray
    value: float
    u: np.ndarray     # row potentials
    v: np.ndarray     # column potentials, A - u - v >= 0 at optimum
    iterations: int


def _northwest(s, d):
    m, n = len(s), len(d)
    s = s.copy()
    d = d.copy()
    cells, flows = [], []
    i = j = 0
    while i < m and j < n:
        x = max(min(s[i], d[j]), 0.0)
        cells.append((i, j))
        flows.append(x)
        s[i] -= x
        d[j] -= x
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return cells, flows


def _potentials(A, cells, m, n):
    adj = [[] for _ in range(m + n)]
    for k, (i, j) in enumerate(cells):
        adj[i].append((m + j, k))
        adj[m + j].append((i, k))
    pot = np.full(m + n, np.nan)
    pot[0] = 0.0
    q = deque([0])
    while q:
        a = q.popleft()
        for b, k in adj[a]:
            if np.isnan(pot[b]):
                i, j = cells[k]
                pot[b] = A[i, j] - pot[a]
                q.append(b)
    return pot[:m], pot[m:], adj


def _tree_path(adj, src, dst, total):
    """Cell indices along the tree path from node ``src`` to node ``dst``."""
    parent = [-1] * total
    via = [-1] * total
    parent[src] = src
    q = deque([src])
    while q:
        a = q.popleft()
        if a == dst:
            break
        for b, k in adj[a]:
            if parent[b] < 0:
                parent[b] = a
                via[b] = k
                q.append(b)
    path = []
    node = dst
    while node != src:
        path.append(via[node])
        node = parent[node]
    return path  # ordered from dst back to src


def transport_simplex(A, supply, demand, tol: float = 1e-12,
                      max_iter: int | None = None) -> TransportResult:
    A = np.asarray(A, dtype=float)
    s = np.asarray(supply, dtype=float)
    d = np.asarray(demand, dtype=float)
    m, n = A.shape
    if s.shape != (m,) or d.shape != (n,):
        raise InvalidInput("marginals do not match the cost shape")
    if not np.isfinite(A).all():
        raise InvalidInput("transportation simplex needs finite costs")
    if abs(s.sum() - d.sum()) > 1e-9 * max(1.0, s.sum()):
        raise InvalidInput("unbalanced transportation problem")
    if max_iter is None:
        max_iter = 50 * m * n + 1000
    cells, flows = _northwest(s, d)
    flows = np.array(flows)
    scale = max(1.0, float(np.abs(A).max()))
    it = 0
    while True:
        u, v, adj = _potentials(A, cells, m, n)
        R = A - u[:, None] - v[None, :]
        k = int(np.argmin(R))
        i, j = divmod(k, n)
        if R[i, j] >= -tol * scale:
            break
        if it >= max_iter:
            raise LPError(f"transportation simplex exceeded {max_iter} pivots")
        path = _tree_path(adj, i, m + j, m + n)
        minus = path[0::2]
        plus = path[1::2]
        theta_k = min(minus, key=lambda c: (flows[c], c))
        theta = flows[theta_k]
        flows[minus] -= theta
        flows[plus] += theta
        flows[theta_k] = theta  # the leaving slot becomes the entering cell
        cells[theta_k] = (i, j)
        it += 1
    plan = np.zeros((m, n))
    for (i, j), f in zip(cells, flows):
        plan[i, j] += max(f, 0.0)
    return TransportResult(plan=plan, value=float((A * plan).sum()), u=u, v=v, iterations=it)
