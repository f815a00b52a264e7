import itertools
import math

import numpy as np
import pytest

from gnqa import ansatz
from gnqa.errors import DeskLimitExceeded, DimensionMismatch, UnresolvedParameter
from gnqa.hilbert import build_diagonal, build_state, expectation, shifted_state
from gnqa.model import QuboProblem, to_ising

from conftest import random_qubo

pytestmark = pytest.mark.usefixtures("backend")


def qubo_form_objective(p, theta):
    """Objective written directly in QUBO coefficients (upper triangle)."""
    c = np.cos(2 * theta)
    total = 0.0
    for i, j, v in p.entries:
        if i < j:
            total += v * c[i] * c[j]
        total -= v * (c[i] + c[j])
    return total


def full_metric(H, theta, lam0):
    d = build_diagonal(H).d
    J = np.column_stack([shifted_state(theta, k, math.pi / 2).amp for k in range(H.n)])
    return 2 * (J.T @ (d[:, None] * J) - lam0 * np.eye(H.n))


def dense_hessian(H, theta):
    n = H.n
    return np.column_stack([ansatz.hessian_matvec(H, theta, np.eye(n)[k]) for k in range(n)])


def test_center_is_zero(rng):
    for _ in range(10):
        H = to_ising(random_qubo(rng, 6))
        assert ansatz.objective(H, np.full(6, math.pi / 4)) == pytest.approx(0.0, abs=1e-12)


def test_two_var_example(two_var):
    H = to_ising(two_var)
    theta = np.array([math.pi / 2, math.pi / 4])
    val = ansatz.objective(H, theta)
    assert val == pytest.approx(expectation(build_state(theta), build_diagonal(H)), abs=1e-12)
    assert val == pytest.approx(0.0, abs=1e-12)


def test_qubo_form_matches_ising_form(rng):
    for _ in range(20):
        n = int(rng.integers(1, 9))
        p = random_qubo(rng, n)
        theta = rng.uniform(-1, 2, n)
        assert ansatz.objective(to_ising(p), theta) == pytest.approx(
            qubo_form_objective(p, theta), abs=1e-10)


def test_vertices(rng):
    p = random_qubo(rng, 6)
    H = to_ising(p)
    d = build_diagonal(H).d
    best = math.inf
    for bits in itertools.product([0, 1], repeat=6):
        x = np.array(bits)
        val = ansatz.objective(H, x * math.pi / 2)
        assert val == pytest.approx(4 * p.evaluate(x) + H.offset, abs=1e-9)
        best = min(best, val)
    assert best == pytest.approx(d.min(), abs=1e-9)


def test_dimension_checks(two_var):
    H = to_ising(two_var)
    with pytest.raises(DimensionMismatch):
        ansatz.objective(H, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        ansatz.gradient(H, np.zeros(1))
    with pytest.raises(DimensionMismatch):
        ansatz.hessian_matvec(H, np.zeros(2), np.zeros(3))


def test_gradient_examples(rng):
    p = random_qubo(rng, 5)
    H = to_ising(p)
    assert np.allclose(ansatz.gradient(H, rng.integers(0, 2, 5) * math.pi / 2), 0.0, atol=1e-12)
    H1 = to_ising(QuboProblem.from_entries(1, [(0, 0, -1)]))
    t = 0.3
    assert ansatz.gradient(H1, np.array([t]))[0] == pytest.approx(-4 * math.sin(2 * t))


def test_gradient_and_hessian_fd(rng):
    for _ in range(100):
        n = int(rng.integers(1, 11))
        H = to_ising(random_qubo(rng, n))
        theta = rng.uniform(-1, 2, n)
        g = ansatz.gradient(H, theta)
        eps = 1e-5
        fd = np.array([(ansatz.objective(H, theta + eps * e) - ansatz.objective(H, theta - eps * e))
                       / (2 * eps) for e in np.eye(n)])
        assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))
        v = rng.standard_normal(n)
        hv = ansatz.hessian_matvec(H, theta, v)
        fdh = (ansatz.gradient(H, theta + eps * v) - ansatz.gradient(H, theta - eps * v)) / (2 * eps)
        assert np.linalg.norm(hv - fdh) <= 1e-5 * max(1.0, np.linalg.norm(hv))


def test_hessian_dense_and_closed_forms(rng):
    for _ in range(20):
        n = int(rng.integers(1, 9))
        p = random_qubo(rng, n)
        H = to_ising(p)
        theta = rng.uniform(-1, 2, n)
        Y = dense_hessian(H, theta)
        c, s = np.cos(2 * theta), np.sin(2 * theta)
        Q = p.to_matrix()
        Qs = Q + Q.T - np.diag(np.diag(Q))
        ref = 4 * np.outer(s, s) * (Qs - np.diag(np.diag(Qs)))
        diag_terms = [2 * Q[j, j] + sum(Qs[j, k] * (1 - c[k]) for k in range(n) if k != j)
                      for j in range(n)]
        ref += np.diag(4 * c * np.array(diag_terms))
        assert np.allclose(Y, ref, atol=1e-12 * max(1.0, np.abs(ref).max()))
        assert np.allclose(ansatz.hessian_diagonal(H, theta), np.diag(ref), atol=1e-10)
    assert np.all(ansatz.hessian_matvec(H, theta, np.zeros(n)) == 0)


def test_metric_matvec_against_full_state(rng):
    for _ in range(20):
        n = int(rng.integers(1, 9))
        H = to_ising(random_qubo(rng, n))
        lam0 = build_diagonal(H).d.min()
        theta = rng.uniform(-1, 2, n)
        G = full_metric(H, theta, lam0)
        Gm = np.column_stack([ansatz.metric_matvec(H, theta, lam0, e) for e in np.eye(n)])
        assert np.allclose(Gm, G, atol=1e-10)
    assert np.all(ansatz.metric_matvec(H, theta, lam0, np.zeros(n)) == 0)


def test_metric_diagonal_at_vertex(rng):
    p = random_qubo(rng, 5)
    H = to_ising(p)
    theta = rng.integers(0, 2, 5) * math.pi / 2
    lam0 = build_diagonal(H).d.min()
    G = np.column_stack([ansatz.metric_matvec(H, theta, lam0, e) for e in np.eye(5)])
    assert np.allclose(G - np.diag(np.diag(G)), 0.0, atol=1e-12)


def test_metric_explicit(rng):
    n = 6
    H = to_ising(random_qubo(rng, n))
    theta = rng.uniform(0.1, 1.4, n)
    G = ansatz.metric_explicit(H, theta)
    s = np.sin(2 * theta)
    iu = np.triu_indices(n, 1)
    Q = np.zeros((n, n))
    Q[H.qi, H.qj] = H.qv
    assert np.allclose(G[iu], (Q * np.outer(s, s))[iu])
    theta[2] = 0.0
    assert np.allclose(np.delete(ansatz.metric_explicit(H, theta)[2], 2), 0.0)
    # the doubled-angle reading reproduces J^T H J; the literal one is reported only
    lam0 = build_diagonal(H).d.min()
    exact = full_metric(H, theta, lam0) / 2 + lam0 * np.eye(n)
    assert np.allclose(ansatz.metric_explicit(H, theta, literal=False), exact, atol=1e-10)
    big = ansatz.MAX_DENSE + 1
    with pytest.raises(DeskLimitExceeded):
        ansatz.metric_explicit(to_ising(QuboProblem(big)), np.zeros(big))


def test_rounding():
    assert ansatz.round_theta([0.0, math.pi / 2]).x.tolist() == [0, 1]
    assert ansatz.round_theta([0.01, 1.56]).x.tolist() == [0, 1]
    with pytest.raises(UnresolvedParameter):
        ansatz.round_theta(np.full(3, math.pi / 4))


def test_rounding_objective(two_var):
    sol = ansatz.round_theta([math.pi / 2, 0.1], two_var)
    assert sol.objective == two_var.evaluate(sol.x) == -1.0
    res = ansatz.resolve_rounding(np.array([math.pi / 4, 0.0]), two_var)
    assert res.x.tolist() == [1, 0] and res.objective == -1.0


def test_energy_variance(rng):
    for _ in range(20):
        n = int(rng.integers(1, 9))
        H = to_ising(random_qubo(rng, n))
        theta = rng.uniform(-1, 2, n)
        amp = build_state(theta).amp
        d = build_diagonal(H).d
        mean = np.sum(amp ** 2 * d)
        ref = np.sum(amp ** 2 * d ** 2) - mean ** 2
        var = ansatz.energy_variance(H, theta)
        assert var == pytest.approx(ref, abs=1e-9 * max(1.0, ref))
        assert var >= np.linalg.norm(ansatz.gradient(H, theta)) ** 2 / 4 - 1e-9


def test_metric_explicit_literal_deviation_recorded(rng, capsys):
    n = 6
    H = to_ising(random_qubo(rng, n))
    theta = rng.uniform(0.1, 1.4, n)
    lam0 = build_diagonal(H).d.min()
    exact = full_metric(H, theta, lam0) / 2 + lam0 * np.eye(n)
    dev = float(np.abs(ansatz.metric_explicit(H, theta, literal=True) - exact).max())
    print(f"literal single-angle metric deviates from J^T H J by {dev:.3g}")
    assert math.isfinite(dev)
