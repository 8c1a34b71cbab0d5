"""Peierls barrier, Aubry and Mather sets, weak KAM solutions.

With ``B = A - c`` (``c`` the Mather constant) the barrier is obtained from
the Kleene closure of ``B`` through its critical nodes,

    A_∞(x, y) = min_{z : B⁺(z, z) = 0} B⁺(x, z) + B⁺(z, y),

and everything else (Aubry set, Mather set, the weak KAM solution and the
conjugate pair) is read off ``A_∞``.  Weak KAM solutions live in the
extended reals: nodes that cannot reach a critical cycle get ``-inf``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .extreal import INF, NINF, is_exact, is_finite, is_ninf, is_pinf, to_exact, to_float
from .mather import mather_constant_cycle
from .minplus import backward_apply, convolve, forward_apply, kleene_plus, reachability


# --- extended-real comparisons used by every certificate below -------------

def ext_residual(a, b) -> float:
    """Sup-distance between two extended-real arrays.

    Entries that are infinite on both sides with the same sign count as
    equal; any other mismatch in finiteness gives +inf.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    fa, fb = is_finite(a), is_finite(b)
    if (fa != fb).any():
        return INF
    inf_a = ~fa
    if inf_a.any() and (to_float(a[inf_a]) != to_float(b[inf_a])).any():
        return INF
    if not fa.any():
        return 0.0
    return float(np.max(np.abs(to_float(a[fa]) - to_float(b[fa]))))


def ext_excess(a, b) -> float:
    """Largest violation of ``a <= b`` entrywise (0 when it holds)."""
    a = np.asarray(a)
    b = np.asarray(b)
    ok = is_ninf(a) | is_pinf(b)
    both = is_finite(a) & is_finite(b)
    bad = ~ok & ~both
    if bad.any():
        return INF
    if not both.any():
        return 0.0
    return float(max(0.0, np.max(to_float(a[both]) - to_float(b[both]))))


def _close(x, y, tol):
    if is_exact(np.asarray(x)) or tol == 0:
        return x == y
    return abs(float(x) - float(y)) <= tol


# --- the bundle ------------------------------------------------------------

@dataclass
class WeakKamBundle:
    A: np.ndarray
    c: object
    B_plus: np.ndarray
    critical: list
    A_inf: np.ndarray
    aubry: list
    mather_D: list
    h: np.ndarray
    conjugate: tuple
    tol: float = 1e-9
    checks: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def peierls_barrier(A, c=None, tol: float = 1e-9, *, _bplus=None):
    """``A_∞`` via critical nodes of ``(A - c)⁺``.

    Returns ``(A_inf, critical, B_plus)``.  Raises
    :class:`~lintrans.errors.NegativeCycle` when ``c`` exceeds the Mather
    constant of ``A``; a ``c`` below it leaves no critical node and the
    barrier is identically +inf.
    """
    A = np.asarray(A)
    if c is None:
        c, _ = mather_constant_cycle(A)
    exact = is_exact(A)
    ktol = 0 if exact else tol
    Bp = kleene_plus(A - c, tol=ktol) if _bplus is None else _bplus
    n = A.shape[0]
    diag = [Bp[z, z] for z in range(n)]
    critical = [z for z in range(n) if is_finite(np.asarray([diag[z]]))[0]
                and _close(diag[z], 0 if exact else 0.0, ktol)]
    if not critical:
        Ainf = np.full((n, n), INF, dtype=object if exact else float)
        return Ainf, critical, Bp
    cols = Bp[:, critical]            # B⁺(x, z)
    rows = Bp[critical, :]            # B⁺(z, y)
    Ainf = (cols[:, :, None] + rows[None, :, :]).min(axis=1)
    return Ainf, critical, Bp


def peierls_oracle(A, c, N: int):
    """Window minimum ``min_{N/2 <= k <= N} (A_k - k c)`` entrywise.

    A truncation of the liminf along powers; used only as a cross-check
    of :func:`peierls_barrier`.  A finite liminf is reached by walks that
    detour through a zero-mean cycle, so it is at most ``2 n max|A - c|``;
    window values above that bound are reported as +inf.
    """
    A = np.asarray(A)
    n = A.shape[0]
    if N < max(2, n * n):
        raise InvalidInput(f"window length N={N} must be at least n^2={n * n}")
    Ak = A
    best = None
    for k in range(1, N + 1):
        if k > 1:
            Ak = convolve(Ak, A)
        if 2 * k >= N:
            cur = Ak - k * c
            best = cur if best is None else np.minimum(best, cur)
    B = to_float(A - c)
    fb = B[np.isfinite(B)]
    bound = 2 * n * (float(np.abs(fb).max()) if fb.size else 0.0)
    over = to_float(best) > bound
    if over.any():
        best = best.copy()
        best[over] = INF
    return best


def compare_barriers(A_inf, oracle, tol: float = 1e-9):
    """Entries where the barrier and the oracle differ by more than ``tol``."""
    a = to_float(A_inf)
    b = to_float(oracle)
    flagged = []
    for (x, y), v in np.ndenumerate(a):
        w = b[x, y]
        if np.isinf(v) or np.isinf(w):
            if v != w:
                flagged.append((x, y))
        elif abs(v - w) > tol:
            flagged.append((x, y))
    return flagged


def _components(A):
    """Weakly connected components of the finite-entry graph, as label array."""
    R = reachability(A)
    W = R | R.T
    n = W.shape[0]
    # close the symmetric relation
    for k in range(n):
        W |= W[:, k, None] & W[None, k, :]
    return np.array([int(np.flatnonzero(W[i])[0]) for i in range(n)])


def _normalise(h, A, critical):
    """Shift ``h`` per weakly connected component so it vanishes at the
    lowest-index critical node of the component."""
    h = h.copy()
    labels = _components(A)
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        crit = [z for z in critical if labels[z] == lab]
        if not crit:
            continue
        z0 = min(crit)
        if is_finite(np.asarray([h[z0]]))[0]:
            shift = h[z0]
            for x in members:
                if is_finite(np.asarray([h[x]]))[0]:
                    h[x] = h[x] - shift
    return h


def weak_kam_ops(bundle: WeakKamBundle, f):
    """``(T∞⁻ f, T∞⁺ f)``, the operators of the barrier ``A_∞``."""
    f = _like(bundle.A_inf, f)
    return backward_apply(bundle.A_inf, f), forward_apply(bundle.A_inf, f)


def _like(M, v):
    v = np.asarray(v)
    if is_exact(M) and not is_exact(v):
        return to_exact(v)
    return v


def conjugate_pair(bundle: WeakKamBundle, f):
    """``ψ₀ = T∞⁻ f`` and ``ψ₁ = T∞⁺ ψ₀`` with their certificate residuals.

    Returns ``(psi0, psi1, checks)``.
    """
    Ainf = bundle.A_inf
    f = _like(Ainf, f)
    Tm = lambda v: backward_apply(Ainf, v)  # noqa: E731
    Tp = lambda v: forward_apply(Ainf, v)   # noqa: E731
    psi0 = Tm(f)
    psi1 = Tp(psi0)
    aub = bundle.aubry
    checks = {
        "psi0_eq_Tminus_psi1": ext_residual(psi0, Tm(psi1)),
        "psi1_eq_Tplus_psi0": ext_residual(psi1, Tp(psi0)),
        "Tplus_Tminus_f_ge_f": ext_excess(f, Tp(Tm(f))),
        "Tminus_Tplus_psi1_le_psi1": ext_excess(Tm(Tp(psi1)), psi1),
        "triple_collapse": ext_residual(Tm(Tp(Tm(f))), Tm(f)),
        "agree_on_aubry": ext_residual(psi0[aub], psi1[aub]) if aub else 0.0,
    }
    return psi0, psi1, checks


def bundle_checks(b: WeakKamBundle, measure=None) -> dict:
    """Residuals of the defining identities of a bundle.

    ``measure`` is an optional coupling (e.g. the LP minimiser) whose
    support must lie in the Mather set.
    """
    A, c, Ainf, h = b.A, b.c, b.A_inf, b.h
    B = A - c
    fin = is_finite(h)
    Th = backward_apply(A, h)
    fixed = ext_residual((Th + c)[fin], h[fin]) if fin.any() else 0.0
    # −inf entries must stay −inf
    if (is_finite(Th) & ~fin).any():
        fixed = INF
    idem = ext_residual(convolve(Ainf, Ainf), Ainf)
    left = ext_residual(convolve(B, Ainf), Ainf)
    right = ext_residual(convolve(Ainf, B), Ainf)
    aub = b.aubry
    if aub:
        fact = (Ainf[:, aub][:, :, None] + Ainf[aub, :][None, :, :]).min(axis=1)
        null_fact = ext_residual(fact, Ainf)
    else:
        null_fact = 0.0 if is_pinf(Ainf).all() else INF
    crit_vs_aubry = 0.0 if sorted(b.critical) == sorted(aub) else INF
    out = {
        "fixed_point": fixed,
        "idempotence": idem,
        "absorption_left": left,
        "absorption_right": right,
        "null_factorization": null_fact,
        "aubry_is_critical": crit_vs_aubry,
        "conjugate_agree_on_aubry": ext_residual(b.conjugate[0][aub], b.conjugate[1][aub]) if aub else 0.0,
    }
    if measure is not None:
        D = set(b.mather_D)
        outside = [p for p in measure.support(1e-9) if p not in D]
        out["measure_in_mather_set"] = 0.0 if not outside else float(
            max(measure.matrix[p] for p in outside))
    return out


def weak_kam_bundle(A, c=None, *, exact: bool = False, tol: float = 1e-9) -> WeakKamBundle:
    """Build the full weak KAM bundle of a cost matrix.

    ``h`` is ``T∞⁻ 0`` shifted per weakly connected component so that it is
    0 at the lowest-index critical node; it is ``-inf`` wherever no
    critical cycle is reachable.
    """
    A = np.asarray(A)
    if exact and not is_exact(A):
        A = to_exact(A)
    if c is None:
        c, _ = mather_constant_cycle(A)
    elif is_exact(A):
        c = to_exact(np.asarray([c]))[0]
    Ainf, critical, Bp = peierls_barrier(A, c, tol=tol)
    n = A.shape[0]
    ex = is_exact(A)
    t = 0 if ex else tol
    aubry = [x for x in range(n) if is_finite(np.asarray([Ainf[x, x]]))[0]
             and _close(Ainf[x, x], 0, t)]
    D = []
    for x in range(n):
        for y in range(n):
            if is_finite(np.asarray([A[x, y], Ainf[y, x]])).all() and _close(A[x, y] + Ainf[y, x], c, t):
                D.append((x, y))
    zero = to_exact(np.zeros(n)) if ex else np.zeros(n)
    h = _normalise(backward_apply(Ainf, zero), A, critical)
    bundle = WeakKamBundle(A=A, c=c, B_plus=Bp, critical=critical, A_inf=Ainf,
                           aubry=aubry, mather_D=D, h=h, conjugate=(None, None), tol=tol)
    psi0, psi1, _ = conjugate_pair(bundle, zero)
    bundle.conjugate = (psi0, psi1)
    bundle.checks = bundle_checks(bundle)
    return bundle


def critical_periods(b: WeakKamBundle) -> list:
    """Period of each strongly connected piece of the critical graph.

    The critical graph has the Aubry nodes as vertices and the Mather set
    pairs between them as edges.  A window oracle of ``A_n - n c`` only
    settles when every period is 1.
    """
    from math import gcd
    aub = set(b.aubry)
    succ = {x: [y for (u, y) in b.mather_D if u == x and y in aub] for x in aub}
    level = {}
    periods = []
    for root in sorted(aub):
        if root in level:
            continue
        level[root] = 0
        order = [root]
        for u in order:
            for v in succ[u]:
                if v not in level:
                    level[v] = level[u] + 1
                    order.append(v)
        g = 0
        for u in order:
            for v in succ[u]:
                g = gcd(g, abs(level[u] + 1 - level[v]))
        periods.append(g)
    return periods


# --- constructive schemes ---------------------------------------------------

@dataclass
class SubsolutionResult:
    phi: np.ndarray
    hypothesis_holds: bool
    residual: float
    is_subsolution: bool

    @property
    def not_yet_subsolution(self) -> bool:
        return not self.is_subsolution


def subsolution_phi(A, c, g, N: int, tol: float = 1e-9) -> SubsolutionResult:
    """``φ_N = min_{1<=n<=N} (T^n g + n c)`` and the check ``T φ_N + c <= φ_N``.

    ``hypothesis_holds`` records whether every node has some ``n <= N``
    with ``T^n g + n c < g``.
    """
    if N < 1:
        raise InvalidInput("N must be at least 1")
    A = np.asarray(A)
    g = _like(A, g)
    u = g
    phi = None
    strict = np.zeros(A.shape[0], dtype=bool)
    for n in range(1, N + 1):
        u = backward_apply(A, u)
        un = u + n * c
        phi = un if phi is None else np.minimum(phi, un)
        fin = is_finite(un)
        strict |= ~fin | (to_float(np.where(fin, un, 0)) < to_float(g))
    excess = ext_excess(backward_apply(A, phi) + c, phi)
    return SubsolutionResult(phi=phi, hypothesis_holds=bool(strict.all()),
                             residual=excess, is_subsolution=excess <= tol)


@dataclass
class PowerBoundReport:
    sups: list              # max_x T^n g + n c, n = 0..N
    K: float                # max_n max(|min A_n - nc|, |max A_n - nc|)
    plateau_deviation: float
    bounded: bool
    strongly_connected: bool
    g_bar: np.ndarray       # truncated limsup envelope
    h: np.ndarray
    iterations: int
    residual: float         # |T h + c - h| on finite entries


def power_bounded_check(A, g, N: int, c=None, tol: float = 1e-9,
                        max_iter: int = 100000) -> PowerBoundReport:
    """Power-boundedness report and the limsup-then-increase weak KAM scheme.

    ``S_n = max_{n<=m<=N} (T^m g + m c)`` is taken at ``n = N // 2`` as the
    truncated limsup ``ḡ``; then ``h <- max(h, T h + c)`` is run from ``ḡ``
    until it stops moving, which yields ``T h + c = h`` whenever
    ``ḡ <= max_{j>=1} T^j ḡ + j c``.
    """
    from .minplus import strongly_connected
    if N < 2:
        raise InvalidInput("N must be at least 2")
    A = np.asarray(A)
    if c is None:
        c, _ = mather_constant_cycle(A)
    g = _like(A, g)
    u = [g]
    for m in range(1, N + 1):
        u.append(backward_apply(A, u[-1]))
    shifted = [u[m] + m * c for m in range(N + 1)]
    sups = [float(np.max(to_float(s))) for s in shifted]
    # two-sided bound from the extreme entries of A_n
    An = A
    K = 0.0
    for n in range(1, N + 1):
        if n > 1:
            An = convolve(An, A)
        fa = to_float(An)
        if np.isfinite(fa).any():
            lo = float(fa[np.isfinite(fa)].min()) - n * float(c)
            hi = float(fa[np.isfinite(fa)].max()) - n * float(c)
            K = max(K, abs(lo), abs(hi))
    gmax = float(np.max(to_float(g)))
    dev = max(abs(s - gmax) for s in sups)
    sc = strongly_connected(A)
    bounded = bool(np.isfinite(sups).all() and dev <= K + tol)

    n0 = N // 2
    g_bar = shifted[n0]
    for m in range(n0 + 1, N + 1):
        g_bar = np.maximum(g_bar, shifted[m])
    h = g_bar
    it = 0
    while it < max_iter:
        nxt = np.maximum(h, backward_apply(A, h) + c)
        it += 1
        if ext_residual(nxt, h) <= (0 if is_exact(A) else tol * 1e-3):
            h = nxt
            break
        h = nxt
    fin = is_finite(h)
    res = ext_residual((backward_apply(A, h) + c)[fin], h[fin]) if fin.any() else 0.0
    return PowerBoundReport(sups=sups, K=K, plateau_deviation=dev, bounded=bounded,
                            strongly_connected=sc, g_bar=g_bar, h=h, iterations=it,
                            residual=res)


@dataclass
class RecessionResult:
    op: object
    g_hat: np.ndarray
    checks: dict
    h: np.ndarray | None = None
    iterations: int = 0


def envelope(A, g):
    """``ĝ(x) = max`` of ``g`` over nodes reachable from ``x`` (including ``x``)."""
    R = reachability(A)
    g = np.asarray(g)
    return np.array([max(g[R[x]]) for x in range(R.shape[0])], dtype=g.dtype)


def decreasing_limit(A, start, c, max_iter: int = 100000, tol: float = 0.0):
    """Limit of ``T^n start + n c`` for a start with ``T start + c <= start``.

    Entries falling below ``min(start) - 2 n max|A - c| - 1`` cannot have a
    finite limit (finite barrier entries are sums of two simple paths) and
    are set to ``-inf``.
    """
    A = np.asarray(A)
    n = A.shape[0]
    B = to_float(A - c)
    fb = B[np.isfinite(B)]
    bmax = float(np.abs(fb).max()) if fb.size else 0.0
    s = to_float(start)
    floor = float(s[np.isfinite(s)].min()) - 2 * n * bmax - 1.0
    h = start
    for it in range(1, max_iter + 1):
        nxt = backward_apply(A, h) + c
        low = is_finite(nxt) & (to_float(nxt) < floor)
        if low.any():
            nxt = nxt.copy()
            nxt[low] = NINF
        if ext_residual(nxt, h) <= tol:
            return nxt, it
        h = nxt
    return h, max_iter


def recession_envelope(A, g, tol: float = 1e-9) -> RecessionResult:
    """Recession operator ``T_r``, envelope ``ĝ`` and, when ``c = min A``,
    the decreasing weak KAM limit from ``ĝ``."""
    from .core import Recession
    A = np.asarray(A)
    g = _like(A, g)
    op = Recession(A)
    g_hat = envelope(A, g)
    Tg = backward_apply(A, g)
    Trg = op(g)
    infA = np.min(A)
    checks = {
        "Tg_plus_infA_le_Trg": ext_excess(Tg + infA, Trg),
        "Trg_le_ghat": ext_excess(Trg, g_hat),
        "envelope_idempotent": ext_residual(envelope(A, g_hat), g_hat),
        "ghat_ge_g": ext_excess(g, g_hat),
    }
    res = RecessionResult(op=op, g_hat=g_hat, checks=checks)
    try:
        c, _ = mather_constant_cycle(A)
    except Exception:
        return res
    if _close(c, infA, 0 if is_exact(A) else tol):
        h, it = decreasing_limit(A, g_hat, c)
        res.h, res.iterations = h, it
        fin = is_finite(h)
        res.checks["fixed_point"] = (ext_residual((backward_apply(A, h) + c)[fin], h[fin])
                                     if fin.any() else 0.0)
        Ainf, _, _ = peierls_barrier(A, c, tol=tol)
        res.checks["matches_barrier_operator"] = ext_residual(h, backward_apply(Ainf, g_hat))
    return res


def distance_like_limit(A, g, max_iter: int = 100000):
    """Decreasing limit of ``T^n g`` for a distance-like cost.

    Requires ``A ⋆ A >= A`` entrywise and Mather constant 0, in which case
    ``T^n g`` is nonincreasing from ``n = 1`` and its limit solves ``T h = h``.
    """
    A = np.asarray(A)
    if ext_excess(A, convolve(A, A)) > 0:
        raise InvalidInput("cost is not distance-like: A ⋆ A >= A fails")
    c, _ = mather_constant_cycle(A)
    if c != 0:
        raise InvalidInput(f"distance-like shortcut needs Mather constant 0, got {c}")
    start = backward_apply(A, _like(A, g))
    return decreasing_limit(A, start, 0, max_iter=max_iter)
