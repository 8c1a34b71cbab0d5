import numpy as np
import pytest

INF = np.inf

THREE_NODE = np.array([[5.0, 1.0, INF],
                       [3.0, INF, 1.0],
                       [1.0, INF, INF]])


@pytest.fixture
def three_node():
    return THREE_NODE.copy()


def random_cost(rng, n, p_inf=0.3, integer=True, low=-5, high=10):
    """Random cost with +inf entries; every row keeps a finite entry."""
    if integer:
        A = rng.integers(low, high + 1, size=(n, n)).astype(float)
    else:
        A = rng.uniform(low, high, size=(n, n))
    mask = rng.random((n, n)) < p_inf
    A[mask] = INF
    for i in range(n):
        if not np.isfinite(A[i]).any():
            A[i, rng.integers(n)] = float(rng.integers(low, high + 1))
    return A


def strongly_connected_cost(rng, n, p_inf=0.5, integer=True, low=-5, high=10):
    """Random cost whose finite entries contain a Hamiltonian cycle."""
    A = random_cost(rng, n, p_inf, integer, low, high)
    perm = rng.permutation(n)
    for a, b in zip(perm, np.roll(perm, -1)):
        if not np.isfinite(A[a, b]):
            A[a, b] = float(rng.integers(low, high + 1)) if integer else rng.uniform(low, high)
    return A


def random_prob(rng, n, full=True):
    w = rng.random(n) + (0.05 if full else 0.0)
    return w / w.sum()


def random_stochastic(rng, n, density=1.0):
    P = rng.random((n, n)) * (rng.random((n, n)) < density)
    P[np.arange(n), rng.integers(n, size=n)] += 0.1
    return P / P.sum(axis=1, keepdims=True)


# --- acceptance summary ---------------------------------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid or "criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        props = dict(report.user_properties)
        _ACCEPTANCE[name] = (report.outcome, report.duration, props)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        outcome, duration, props = _ACCEPTANCE[name]
        status = "PASS" if outcome == "passed" else "FAIL"
        extra = " ".join(f"{k}={v}" for k, v in props.items())
        tr.write_line(f"{status} {name} ({duration:.2f}s) {extra}".rstrip())
