from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lintrans import ergopt
from lintrans.errors import DeadState, InvalidInput

GOLDEN = np.array([[1, 1], [1, 0]])
FULL2 = np.ones((2, 2), dtype=int)


def golden():
    return ergopt.build_sft(GOLDEN, 1, {"00": 1, "01": 1, "10": 0})


def x0(w):
    return float(w[0])


def random_sft(rng, r, k):
    while True:
        M = (rng.random((r, r)) < 0.7).astype(int)
        M[np.arange(r), rng.permutation(r)] = 1
        try:
            return ergopt.build_sft(M, k, lambda w, t={}: t.setdefault(w, float(rng.integers(-5, 6))))
        except DeadState:
            continue


@pytest.mark.parametrize("M,k,nodes,edges", [
    (FULL2, 1, 2, 4),
    (GOLDEN, 1, 2, 3),
    (FULL2, 2, 4, 8),
])
def test_graph_sizes(M, k, nodes, edges):
    G = ergopt.build_sft(M, k, lambda w: 0.0)
    assert len(G.nodes) == nodes and len(G.edges) == edges


def test_golden_has_no_11_edge():
    assert "11" not in {ergopt._word_key(e[2]) for e in golden().edges}


def test_dead_state_reported():
    with pytest.raises(DeadState) as info:
        ergopt.build_sft([[1, 1], [0, 0]], 1, lambda w: 0.0)
    assert info.value.words == ["1"]


def test_potential_formats_agree():
    table = np.array([[1.0, 1.0], [0.0, 0.0]])
    a = ergopt.build_sft(GOLDEN, 1, table)
    b = ergopt.build_sft(GOLDEN, 1, table.ravel())
    c = ergopt.build_sft(GOLDEN, 1, {"00": 1, "01": 1, "10": 0, "11": 0})
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.weights, c.weights)
    with pytest.raises(InvalidInput):
        ergopt.build_sft(GOLDEN, 1, {"00": 1})


def test_golden_value_exact():
    value, cycle = ergopt.ergodic_value(golden(), exact=True)
    assert value == Fraction(1, 2)
    assert [ergopt._word_key(w) for w in cycle] == ["0", "1"]


def test_full_shift_min_x0():
    value, cycle = ergopt.ergodic_value(ergopt.build_sft(FULL2, 1, x0))
    assert value == 0 and cycle == [(0,)]


def test_constant_potential():
    G = ergopt.build_sft(FULL2, 2, lambda w: 2.5)
    assert ergopt.ergodic_value(G)[0] == 2.5
    st_ = ergopt.stochastic_holonomic_lp(G)
    assert st_.primal == pytest.approx(2.5, abs=1e-12) and st_.dual == pytest.approx(2.5, abs=1e-12)
    S = ergopt.subaction(G)
    assert all(v == 0 for v in S.h)


def test_golden_holonomic_measure():
    H = ergopt.holonomic_lp(golden())
    assert H.value == pytest.approx(0.5, abs=1e-12)
    assert H.measure == pytest.approx({"01": 0.5, "10": 0.5}, abs=1e-12)
    assert H.gap <= 1e-12


def test_full_shift_holonomic_delta():
    H = ergopt.holonomic_lp(ergopt.build_sft(FULL2, 1, x0))
    assert H.value == pytest.approx(0.0, abs=1e-12)
    assert H.measure == pytest.approx({"00": 1.0}, abs=1e-12)


def test_sense_flip():
    G = ergopt.build_sft(FULL2, 2, lambda w: float(w[0] - 2 * w[1] + w[2]))
    Gneg = ergopt.build_sft(FULL2, 2, lambda w: -float(w[0] - 2 * w[1] + w[2]))
    assert ergopt.holonomic_lp(Gneg, "max").value == pytest.approx(
        -ergopt.holonomic_lp(G, "min").value, abs=1e-12)
    assert ergopt.ergodic_value(Gneg, "max")[0] == -ergopt.ergodic_value(G, "min")[0]


def test_golden_subaction():
    S = ergopt.subaction(golden())
    assert S.c == Fraction(1, 2)
    assert list(S.h) == [Fraction(0), Fraction(1, 2)]
    assert S.sigma_residual == 0 and S.tau_residual == 0


def test_full_shift_subaction_basin():
    S = ergopt.subaction(ergopt.build_sft(FULL2, 2, x0))
    assert S.sigma_residual == 0
    assert S.h[0] == 0


def test_golden_stochastic():
    st_ = ergopt.stochastic_holonomic_lp(golden())
    assert st_.primal <= 0.5 + 1e-9 and st_.gap <= 1e-7


def test_full_shift_stochastic_zero():
    st_ = ergopt.stochastic_holonomic_lp(ergopt.build_sft(FULL2, 1, x0))
    assert st_.primal == pytest.approx(0.0, abs=1e-12)


@given(seed=st.integers(0, 2**32 - 1), r=st.integers(2, 3), k=st.integers(1, 2))
@settings(max_examples=25, deadline=None)
def test_equality_chain_and_calibration(seed, r, k):
    G = random_sft(np.random.default_rng(seed), r, k)
    value, _ = ergopt.ergodic_value(G)
    H = ergopt.holonomic_lp(G)
    assert abs(value - H.value) <= 1e-7 and H.gap <= 1e-7
    S = ergopt.subaction(G)
    assert S.sigma_residual == 0 and S.tau_residual == 0
    St = ergopt.stochastic_holonomic_lp(G)
    assert St.primal <= H.value + 1e-9 and St.gap <= 1e-7


@given(seed=st.integers(0, 2**32 - 1), r=st.integers(2, 3))
@settings(max_examples=20, deadline=None)
def test_refinement_keeps_value(seed, r):
    G = random_sft(np.random.default_rng(seed), r, 1)
    a, _ = ergopt.ergodic_value(G, exact=True)
    b, _ = ergopt.ergodic_value(ergopt.refine(G), exact=True)
    assert a == b


def test_max_sense_subaction():
    S = ergopt.subaction(ergopt.build_sft(FULL2, 1, x0), "max")
    assert S.value == 1
    assert S.sigma_residual == 0
