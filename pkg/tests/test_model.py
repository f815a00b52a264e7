import itertools

import numpy as np
import pytest

from gnqa.errors import DeskLimitExceeded
from gnqa.hilbert import build_diagonal
from gnqa.model import (PuboProblem, QuboProblem, Spectrum, brute_force, decode,
                        hamiltonian_stats, objective_table, pubo_reduce_check, to_ising, to_spin)

from conftest import random_qubo

pytestmark = pytest.mark.usefixtures("backend")


def test_two_variable_conversion(two_var):
    H = to_ising(two_var)
    assert np.allclose(H.h, [0.0, 0.0])
    assert H.q == {(0, 1): 2.0}
    assert H.offset == 2.0
    d = build_diagonal(H).d
    assert np.allclose(d, [2, -2, -2, 2])
    assert (-H.offset + d.min()) / 4 == -1.0


def test_single_variable_conversion():
    H = to_ising(QuboProblem.from_entries(1, [(0, 0, -1)]))
    assert np.allclose(H.h, [2.0]) and H.qv.size == 0 and H.offset == 2.0
    assert np.allclose(build_diagonal(H).d, [2, -2])


def test_zero_problem():
    p = QuboProblem(3)
    H = to_ising(p)
    assert np.all(H.h == 0) and H.offset == 0
    res = brute_force(p)
    assert res.optimum == 0 and len(res.minimizers) == 8


def test_entries_validated():
    with pytest.raises(ValueError):
        QuboProblem(2, ((1, 0, 1.0),))
    with pytest.raises(ValueError):
        QuboProblem(2, ((0, 0, 1.0), (0, 0, 2.0)))
    with pytest.raises(ValueError):
        QuboProblem.from_entries(2, [(1, 0, 1.0)])
    with pytest.raises(ValueError):
        PuboProblem(3, (((2, 1), 1.0),))


def test_from_entries_sums_duplicates():
    p = QuboProblem.from_entries(2, [(0, 1, 1.5), (0, 1, 0.5), (1, 1, 1.0)])
    assert p.entries == ((0, 1, 2.0), (1, 1, 1.0))


def test_hamiltonian_stats_examples():
    H = to_ising(QuboProblem.from_entries(2, [(0, 0, -1), (1, 1, -1), (0, 1, 2)]))
    assert hamiltonian_stats(H) == (0.0, 4.0, 4.0)
    H1 = to_ising(QuboProblem.from_entries(1, [(0, 0, -1)]))
    tr, fro, var = hamiltonian_stats(H1)
    assert tr == 0.0 and var == 4.0 and fro == pytest.approx(np.sqrt(2) * 2)
    assert hamiltonian_stats(to_ising(QuboProblem(3))) == (0.0, 0.0, 0.0)


def test_brute_force_two_var(two_var):
    res = brute_force(two_var)
    assert res.optimum == -1
    assert sorted(map(tuple, res.minimizers.tolist())) == [(0, 1), (1, 0)]


def test_brute_force_triangle_maxcut():
    p = QuboProblem.from_entries(3, [(0, 0, -2), (1, 1, -2), (2, 2, -2),
                                     (0, 1, 2), (0, 2, 2), (1, 2, 2)])
    res = brute_force(p)
    assert res.optimum == -2 and len(res.minimizers) == 6


def test_brute_force_desk_limit():
    with pytest.raises(DeskLimitExceeded):
        brute_force(QuboProblem(8), limit=6)


@pytest.mark.parametrize("seed", range(10))
def test_ising_round_trip_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    p = random_qubo(rng, n)
    H = to_ising(p)
    d = build_diagonal(H).d
    res = brute_force(p)
    assert abs((d.min() - H.offset) / 4 - res.optimum) <= 1e-12
    # x^T Q x = (H - H0) / 4 pointwise
    assert np.allclose((d - H.offset) / 4, objective_table(p), atol=1e-12)
    _, fro, var = hamiltonian_stats(H)
    assert abs(d.mean()) <= 1e-10 * max(fro, 1.0)
    assert np.linalg.norm(d) == pytest.approx(fro, rel=1e-12, abs=1e-12)
    assert d.var() == pytest.approx(var, rel=1e-12, abs=1e-12)
    # minimizer index <-> argmin of the diagonal
    idx = np.flatnonzero(d <= d.min() + 1e-9)
    assert np.array_equal(decode(idx, n), res.minimizers)


def test_objective_table_matches_evaluate(rng):
    p = random_qubo(rng, 6)
    table = objective_table(p)
    for k, x in enumerate(itertools.product([0, 1], repeat=6)):
        bits = decode(k, 6)[0]
        assert table[k] == pytest.approx(p.evaluate(bits))


def test_pubo_spin_form_matches_enumeration(rng):
    terms = [((0, 1, 2), 3.0), ((1,), -2.0), ((0, 3), 1.5), ((), 4.0), ((1, 2, 3), -1.0)]
    p = PuboProblem.from_terms(4, terms)
    d = build_diagonal(p).d
    S = to_spin(p)
    assert np.allclose((d - S.offset) / 4, objective_table(p))


def test_qubo_spin_form_agrees_with_ising(rng):
    p = random_qubo(rng, 5)
    a = to_spin(p.as_pubo())
    b = to_ising(p).to_spin()
    assert a.offset == pytest.approx(b.offset)
    assert dict(a.terms) == pytest.approx(dict(b.terms))


def test_pubo_reduce_check():
    assert pubo_reduce_check(PuboProblem.from_terms(3, [((0, 1, 2), 1.0)]))["degree"] == 3
    assert pubo_reduce_check(QuboProblem.from_entries(2, [(0, 1, 1.0)]))["degree"] == 2
    rep = pubo_reduce_check(PuboProblem.from_terms(2, [((), 5.0)]))
    assert rep["degree"] == 0 and rep["constant_only"] and not rep["quadratized"]


def test_spectrum():
    s = Spectrum.from_diagonal(np.array([2.0, -2.0, -2.0, 2.0]))
    assert s.lambda0 == -2.0 and s.degeneracy == 2
