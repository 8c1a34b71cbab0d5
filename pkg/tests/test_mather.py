from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog as scipy_linprog

from conftest import THREE_NODE, random_cost, strongly_connected_cost
from lintrans import mather
from lintrans.errors import NoFiniteCycle
from lintrans.extreal import INF, to_exact
from lintrans.minplus import backward_apply, identity
from lintrans.weakkam import weak_kam_bundle


def cycle_oracle(A):
    """Minimum mean over all simple cycles, in exact arithmetic."""
    n = A.shape[0]
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    for i, j in zip(*np.nonzero(np.isfinite(A))):
        G.add_edge(int(i), int(j))
    best = None
    for cyc in nx.simple_cycles(G):
        total = sum(Fraction(A[a, b]) for a, b in zip(cyc, cyc[1:] + cyc[:1]))
        mean = total / len(cyc)
        best = mean if best is None else min(best, mean)
    return best


DIAG = np.diag([3.0, 1.0, 2.0]) + np.where(np.eye(3) > 0, 0.0, INF)


def test_three_node_cycle():
    c, cyc = mather.mather_constant_cycle(THREE_NODE)
    assert c == 1 and cyc == [0, 1, 2]


def test_three_node_lp_measure():
    c, pi = mather.mather_constant_lp(THREE_NODE)
    assert c == pytest.approx(1.0, abs=1e-12)
    expect = np.zeros((3, 3))
    expect[0, 1] = expect[1, 2] = expect[2, 0] = 1 / 3
    assert np.allclose(pi.matrix, expect, atol=1e-12)


def test_zero_diagonal():
    A = np.where(np.eye(4) > 0, 0.0, 5.0)
    c, cyc = mather.mather_constant_cycle(A)
    assert c == 0 and len(cyc) == 1
    c_lp, pi = mather.mather_constant_lp(A)
    assert c_lp == pytest.approx(0.0, abs=1e-12)
    assert np.isclose(np.trace(pi.matrix), 1.0)


def test_diagonal_potential():
    c, cyc = mather.mather_constant_cycle(DIAG)
    assert c == 1 and cyc == [1]
    h = mather.dual_certificate(DIAG)
    assert np.min(h - backward_apply(DIAG, h)) == pytest.approx(1.0, abs=1e-9)


def test_no_finite_cycle():
    A = np.array([[INF, 1.0], [INF, INF]])
    with pytest.raises(NoFiniteCycle) as info:
        mather.mather_constant_cycle(A)
    assert info.value.value == INF


def test_exact_mode_returns_fraction():
    A = to_exact(np.array([[INF, Fraction(1, 3)], [Fraction(1, 2), INF]], dtype=object))
    c, cyc = mather.mather_constant_cycle(A)
    assert c == Fraction(5, 12) and cyc == [0, 1]


@pytest.mark.parametrize("seed", range(25))
def test_cycle_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    A = random_cost(rng, n, p_inf=0.4)
    c, cyc = mather.mather_constant_cycle(to_exact(A))
    assert c == cycle_oracle(A)
    assert mather.cycle_mean(to_exact(A), cyc) == c
    c_float, _ = mather.mather_constant_cycle(A)
    assert c_float == pytest.approx(float(c), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_lp_matches_scipy(seed):
    rng = np.random.default_rng(100 + seed)
    n = 8
    A = random_cost(rng, n, integer=False)
    c_lp, pi = mather.mather_constant_lp(A)
    idx = np.argwhere(np.isfinite(A))
    m = len(idx)
    Aeq = np.zeros((n + 1, m))
    Aeq[idx[:, 0], np.arange(m)] += 1.0
    Aeq[idx[:, 1], np.arange(m)] -= 1.0
    Aeq[n] = 1.0
    beq = np.zeros(n + 1)
    beq[n] = 1.0
    ref = scipy_linprog(A[idx[:, 0], idx[:, 1]], A_eq=Aeq, b_eq=beq, method="highs")
    assert c_lp == pytest.approx(ref.fun, abs=1e-9)
    assert pi.residual() <= 1e-12


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), s=st.integers(-20, 20))
@settings(max_examples=50, deadline=None)
def test_shift_equivariance(seed, n, s):
    A = random_cost(np.random.default_rng(seed), n)
    try:
        c, cyc = mather.mather_constant_cycle(to_exact(A))
    except NoFiniteCycle:
        return
    c2, cyc2 = mather.mather_constant_cycle(to_exact(A + s))
    assert c2 == c + s
    # the witness may switch between tied cycles; its mean may not
    assert mather.cycle_mean(to_exact(A), cyc2) == c


def test_lp_shift_keeps_measure():
    c, pi = mather.mather_constant_lp(THREE_NODE)
    c2, pi2 = mather.mather_constant_lp(THREE_NODE + 2.5)
    assert c2 == pytest.approx(c + 2.5, abs=1e-12)
    assert np.allclose(pi.matrix, pi2.matrix, atol=1e-12)


def test_diagnostics_three_node():
    rep = mather.convergence_diagnostics(THREE_NODE, np.zeros(3), 30)
    assert rep.bound_holds is True
    for n, est in enumerate(rep.estimates, start=1):
        assert abs(est - 1) <= rep.K / n + 1e-12


def test_diagnostics_constant_cost():
    rep = mather.convergence_diagnostics(np.full((3, 3), 2.5), np.zeros(3), 10)
    assert rep.K == 0 and rep.minima == [2.5 * n for n in range(1, 11)]


def test_diagnostics_not_applicable():
    A = np.array([[0.0, 1.0], [INF, 0.0]])
    rep = mather.convergence_diagnostics(A, np.zeros(2), 5)
    assert rep.bound_holds is None
    assert rep.minima == [0.0] * 5


@pytest.mark.parametrize("seed", range(8))
def test_cesaro_average_converges(seed):
    rng = np.random.default_rng(seed)
    A = strongly_connected_cost(rng, 6)
    rep = mather.convergence_diagnostics(A, rng.uniform(-1, 1, 6), 200)
    # (1/n) <T^n g, μ̄> + c is O(1/n)
    assert abs(rep.cesaro[-1]) <= (rep.K + 12) / 200


@pytest.mark.parametrize("seed", range(10))
def test_dual_certificate_random(seed):
    rng = np.random.default_rng(seed)
    A = random_cost(rng, 7, p_inf=0.5)
    try:
        c, _ = mather.mather_constant_cycle(A)
    except NoFiniteCycle:
        pytest.skip("no finite cycle")
    h = mather.dual_certificate(A)
    assert np.isfinite(h).all()
    assert np.min(h - backward_apply(A, h)) == pytest.approx(c, abs=1e-9)


def test_identity_certificate():
    h = mather.dual_certificate(identity(3))
    assert np.array_equal(h, np.zeros(3))


@pytest.mark.parametrize("seed", range(10))
def test_measure_supported_in_mather_set(seed):
    rng = np.random.default_rng(seed)
    A = strongly_connected_cost(rng, 7)
    _, pi = mather.mather_constant_lp(A)
    D = set(weak_kam_bundle(A).mather_D)
    assert set(pi.support()) <= D


def test_certificate_bundle():
    cert = mather.mather_certificate(THREE_NODE, N=50)
    assert cert.c == 1
    assert all(v <= 1e-9 for k, v in cert.checks.items() if k != "limit_bound")
    assert cert.checks["limit_residual"] <= cert.checks["limit_bound"] + 1e-12
