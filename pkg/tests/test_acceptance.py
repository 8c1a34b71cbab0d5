"""Acceptance criteria, one test per criterion.

Each test records its measurements with ``record_property`` and checks its
runtime budget; ``conftest.py`` prints one PASS/FAIL line per criterion at
the end of the session.
"""
import time
from fractions import Fraction

import networkx as nx
import numpy as np

from conftest import random_cost, random_prob, random_stochastic, strongly_connected_cost
from lintrans import core, entropic, ergopt, mather, transfers, weakkam
from lintrans.errors import DeadState
from lintrans.extreal import INF, to_exact
from lintrans.minplus import backward_apply, convolve, power


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds
        self.start = time.perf_counter()

    def check(self, record_property):
        elapsed = time.perf_counter() - self.start
        record_property("seconds", round(elapsed, 2))
        assert elapsed < self.seconds, f"runtime {elapsed:.1f}s over budget {self.seconds}s"


def exhaustive_cycle_mean(A):
    G = nx.DiGraph()
    G.add_nodes_from(range(A.shape[0]))
    for i, j in zip(*np.nonzero(np.isfinite(A))):
        G.add_edge(int(i), int(j))
    means = [sum(Fraction(A[a, b]) for a, b in zip(cyc, cyc[1:] + cyc[:1])) / len(cyc)
             for cyc in nx.simple_cycles(G)]
    return min(means)


def axiom_operators(rng):
    n = 6
    A = rng.integers(-5, 10, (n, n)).astype(float)
    A[rng.random((n, n)) < 0.3] = INF
    A[np.arange(n), rng.permutation(n)] = rng.integers(-5, 10, n)
    P = random_stochastic(rng, n, density=0.6)
    nu = random_prob(rng, n)
    C = rng.uniform(0, 4, (n, n))
    maxplus = core.MaxPlusCost(A)
    ops = [
        maxplus,
        core.MinPlusForward(A),
        core.Recession(A),
        core.AffineShift(rng.integers(n, size=n), rng.integers(-4, 5, n)),
        core.Entropic(C, nu, 0.5),
        core.Markov(P),
        core.Reduite(P),
        core.FillingScheme(P),
        core.ConvexEnergy(nu, 0.25),
        core.combine(maxplus, core.Markov(P), "convex", 0.25),
        core.combine(maxplus, core.MaxPlusCost(A.T), "max"),
        core.scale(core.Entropic(C, nu, 1.0), 0.5),
        core.compose(maxplus, core.Markov(P)),
    ]
    return ops


MAX_PLUS_KINDS = {"max_plus_cost", "min_plus_forward", "recession", "affine_shift"}


def test_criterion_01_axioms(record_property):
    budget = Budget(5)
    failed, exact_bad = [], []
    for op in axiom_operators(np.random.default_rng(2024)):
        rep = core.check_axioms(op, trials=1000, seed=7, tol=1e-9)
        label = f"{op.kind}:{type(op).__name__}"
        record_property(label, f"{rep.max_violation:.3g}")
        if not rep.passed:
            failed.append(label)
        if op.kind in MAX_PLUS_KINDS and rep.max_violation != 0.0:
            exact_bad.append(label)
    record_property("failed", ",".join(failed) or "none")
    budget.check(record_property)
    assert not exact_bad, f"max-plus kinds with nonzero violation: {exact_bad}"
    assert not failed, f"operator kinds violating the axioms: {failed}"


def test_criterion_02_semigroup(record_property):
    budget = Budget(10)
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 31))
        A = random_cost(rng, n, p_inf=float(rng.uniform(0, 0.6)))
        total = int(rng.integers(2, 65))
        m = int(rng.integers(1, total))
        lhs = power(A, total)
        rhs = convolve(power(A, m), power(A, total - m))
        assert np.array_equal(lhs, rhs)
    budget.check(record_property)


def test_criterion_03_mather(record_property):
    budget = Budget(60)
    rng = np.random.default_rng(3)
    worst_lp = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        A = strongly_connected_cost(rng, n, p_inf=float(rng.uniform(0, 0.8)),
                                    integer=bool(rng.integers(2)))
        c, _ = mather.mather_constant_cycle(A)
        c_lp, _ = mather.mather_constant_lp(A)
        assert abs(c - c_lp) <= 1e-7
        worst_lp = max(worst_lp, abs(c - c_lp))
        d = mather.convergence_diagnostics(A, np.zeros(n), 100, c=c)
        N = d.N
        assert abs(d.minima[-1] / N - c) <= d.K / N + 1e-12
        # the fitted constant is bounded a priori by n max |A - c|
        B = A[np.isfinite(A)] - c
        assert d.K <= n * np.abs(B).max() + 1e-9
    for _ in range(100):
        n = int(rng.integers(1, 9))
        A = random_cost(rng, n, p_inf=0.4)
        exact, _ = mather.mather_constant_cycle(to_exact(A))
        assert exact == exhaustive_cycle_mean(A)
    record_property("max_cycle_lp_gap", f"{worst_lp:.3g}")
    budget.check(record_property)


def test_criterion_04_peierls(record_property):
    budget = Budget(60)
    rng = np.random.default_rng(4)
    flagged_instances = aperiodic_flagged = periodic = 0
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 13))
        A = strongly_connected_cost(rng, n, p_inf=float(rng.uniform(0, 0.7)))
        b = weakkam.weak_kam_bundle(A, exact=True)
        oracle = weakkam.peierls_oracle(A, float(b.c), 200)
        Ainf = np.array(b.A_inf, dtype=float)
        flags = weakkam.compare_barriers(Ainf, oracle, tol=1e-9)
        aperiodic = all(p == 1 for p in weakkam.critical_periods(b))
        periodic += not aperiodic
        if flags:
            flagged_instances += 1
            aperiodic_flagged += aperiodic
            continue
        worst = max(worst, weakkam.ext_residual(Ainf, oracle))
    record_property("periodic_instances", periodic)
    record_property("flagged", flagged_instances)
    record_property("flagged_aperiodic", aperiodic_flagged)
    record_property("max_residual", f"{worst:.3g}")
    budget.check(record_property)
    assert worst <= 1e-9
    assert aperiodic_flagged == 0


def test_criterion_05_weak_kam(record_property):
    budget = Budget(30)
    rng = np.random.default_rng(5)
    worst = {}
    for i in range(60):
        n = int(rng.integers(1, 25))
        if i % 2:
            A = strongly_connected_cost(rng, n, p_inf=float(rng.uniform(0, 0.8)),
                                        integer=bool(i % 4 == 1))
        else:
            A = random_cost(rng, n, p_inf=float(rng.uniform(0.3, 0.8)))
        b = weakkam.weak_kam_bundle(A)
        _, pi = mather.mather_constant_lp(A)
        checks = weakkam.bundle_checks(b, measure=pi)
        for k, v in checks.items():
            worst[k] = max(worst.get(k, 0.0), v)
    for k, v in worst.items():
        record_property(k, f"{v:.3g}")
    budget.check(record_property)
    assert max(worst.values()) <= 1e-9, worst


def test_criterion_06_worked_examples(record_property):
    budget = Budget(5)
    x = np.arange(9) / 8.0
    linear = np.abs(x[:, None] - x[None, :])
    assert np.array_equal(convolve(linear, linear), linear)

    x = np.array([0.0, 0.5, 1.0])
    quad = (x[:, None] - x[None, :]) ** 2
    assert convolve(quad, quad)[0, 2] == 0.5

    grid = np.arange(61) / 60.0
    T = core.MaxPlusCost((grid[:, None] - grid[None, :]) ** 2)
    g = np.random.default_rng(6).uniform(-1, 1, 61)
    gaps = {}
    for n in (1, 2, 3, 4, 5, 6, 10, 12, 15, 20, 30, 60):
        gap = float(g.max() - T.power(g, n).min())
        assert gap <= n ** (1 - 2) * 1.0 ** 2 + 1e-12
        gaps[n] = gap
    record_property("gap_n60", f"{gaps[60]:.3g}")

    for seed in range(20):
        r = np.random.default_rng(seed)
        n = int(r.integers(1, 8))
        d = r.integers(-5, 6, n).astype(float)
        A = np.full((n, n), INF)
        A[np.arange(n), np.arange(n)] = d
        b = weakkam.weak_kam_bundle(A)
        argmin = list(np.flatnonzero(d == d.min()))
        assert b.c == d.min() and b.aubry == argmin
        f = r.uniform(-3, 3, n)
        Tf = backward_apply(b.A_inf, f)
        off = np.setdiff1d(np.arange(n), argmin)
        assert np.array_equal(Tf[argmin], f[argmin]) and np.all(Tf[off] == -INF)
    budget.check(record_property)


def test_criterion_07_ot_duality(record_property):
    budget = Budget(30)
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(100):
        if i % 5 == 0:
            n = int(rng.integers(2, 21))
            A = random_cost(rng, n, p_inf=0.2, integer=False)
            np.fill_diagonal(A, rng.uniform(-5, 10, n))
            A[np.arange(n), rng.permutation(n)] = rng.uniform(-5, 10, n)
        else:
            n = int(rng.integers(2, 51))
            A = rng.uniform(-5, 10, (n, n))
        mu = random_prob(rng, n, full=False)
        nu = random_prob(rng, n, full=False)
        P = transfers.CostOT(A)
        primal = transfers.transfer_value(P, mu, nu)
        if primal == INF:
            continue
        dual, _ = transfers.dual_value(P, mu, nu)
        worst = max(worst, abs(primal - dual))
    record_property("max_gap", f"{worst:.3g}")
    budget.check(record_property)
    assert worst <= 1e-7


def test_criterion_08_sinkhorn(record_property):
    budget = Budget(30)
    rng = np.random.default_rng(8)
    worst_res = worst_kappa = 0.0
    for i in range(40):
        n = int(rng.integers(2, 21))
        C = rng.uniform(0, 2, (n, n))
        eps = (1.0, 0.5, 0.2, 0.1)[i % 4]
        r = entropic.sinkhorn_solve(C, random_prob(rng, n), random_prob(rng, n), eps, tol=1e-9)
        assert r.residual <= 1e-8 and r.kappa < 1
        worst_res = max(worst_res, r.residual)
        worst_kappa = max(worst_kappa, r.kappa)
    for eps in (1.0, 0.1, 0.01):
        for _ in range(20):
            n = int(rng.integers(2, 21))
            op = core.Entropic(rng.uniform(0, 5, (n, n)), random_prob(rng, n), eps)
            lo, val, hi = entropic.sandwich(op, rng.uniform(-5, 5, n))
            assert (lo <= val).all() and (val <= hi).all()
    record_property("max_residual", f"{worst_res:.3g}")
    record_property("max_kappa", f"{worst_kappa:.4f}")
    budget.check(record_property)


def test_criterion_09_schrodinger(record_property):
    budget = Budget(10)
    rng = np.random.default_rng(9)
    worst_gap = worst_limit = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 21))
        m, nu = random_prob(rng, n), random_prob(rng, n, full=False)
        d = entropic.schrodinger_duality(m, nu)
        worst_gap = max(worst_gap, d.gap)
    checked = 0
    while checked < 30:
        n = int(rng.integers(2, 21))
        S = entropic.MarkovSemigroup(random_stochastic(rng, n, density=0.5))
        if not (S.irreducible and S.aperiodic):
            continue
        f = rng.uniform(-3, 3, n)
        _, err = S.time_to_limit(f, tol=1e-10)
        assert np.allclose(S.limit(f), np.log(S.m @ np.exp(f)), atol=1e-12)
        worst_limit = max(worst_limit, err)
        checked += 1
    record_property("max_kl_gap", f"{worst_gap:.3g}")
    record_property("max_limit_error", f"{worst_limit:.3g}")
    budget.check(record_property)
    assert worst_gap <= 1e-9 and worst_limit <= 1e-10


def random_sft(rng, r, k):
    while True:
        M = (rng.random((r, r)) < 0.7).astype(int)
        M[np.arange(r), rng.permutation(r)] = 1
        table = {}
        try:
            return ergopt.build_sft(M, k, lambda w: table.setdefault(w, float(rng.integers(-5, 6))))
        except DeadState:
            continue


def test_criterion_10_ergopt(record_property):
    budget = Budget(60)
    golden = ergopt.build_sft([[1, 1], [1, 0]], 1, {"00": 1, "01": 1, "10": 0})
    value, _ = ergopt.ergodic_value(golden, exact=True)
    assert value == Fraction(1, 2)
    rng = np.random.default_rng(10)
    worst_chain = worst_stoch = 0.0
    shapes = [(r, k) for r in (2, 3, 4) for k in (1, 2, 3)]
    for i in range(36):
        r, k = shapes[i % len(shapes)]
        G = random_sft(rng, r, k)
        value, _ = ergopt.ergodic_value(G)
        H = ergopt.holonomic_lp(G)
        chain = max(abs(value - H.value), abs(H.value - H.dual_value))
        worst_chain = max(worst_chain, chain)
        S = ergopt.subaction(G)
        assert S.sigma_residual == 0 and S.tau_residual == 0
        St = ergopt.stochastic_holonomic_lp(G)
        assert St.primal <= H.value + 1e-9
        worst_stoch = max(worst_stoch, St.gap)
    record_property("max_chain_gap", f"{worst_chain:.3g}")
    record_property("max_stochastic_gap", f"{worst_stoch:.3g}")
    budget.check(record_property)
    assert worst_chain <= 1e-7 and worst_stoch <= 1e-7
