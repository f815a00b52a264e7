import pytest

from gnqa.errors import InfeasibleSpec, ParseError
from gnqa.model import PuboProblem, QuboProblem, brute_force
from gnqa.problems import (FAMILIES, GeneratorSpec, generate, generate_sat2_unique, is_feasible,
                           load, load_presets, problem_hash, save)

SMALL = {
    "maxcut": (6, {}), "number_partitioning": (6, {}), "set_packing": (6, {}),
    "set_partitioning": (6, {}), "min_vertex_cover": (6, {}), "knapsack": (5, {}),
    "max2sat": (6, {}), "graph_coloring": (4, {"colors": 3}), "qap": (3, {}), "tsp": (3, {}),
    "nqueens": (4, {}), "general01": (8, {}), "random_qubo": (6, {}), "sat2": (8, {}),
    "sat3": (8, {"clauses": 20}),
}


def test_every_family_has_a_small_case():
    assert set(SMALL) == set(FAMILIES)


def test_triangle_maxcut():
    inst = generate(GeneratorSpec("maxcut", 3, params={"edges": 3}))
    p = inst.problem
    assert sorted(map(tuple, inst.meta["edges"])) == [(0, 1), (0, 2), (1, 2)]
    assert {(i, j): v for i, j, v in p.entries} == {
        (0, 0): -2, (1, 1): -2, (2, 2): -2, (0, 1): 2, (0, 2): 2, (1, 2): 2}
    res = brute_force(p)
    assert res.optimum == -2 and len(res.minimizers) == 6


def test_number_partitioning_example():
    values = [3, 1, 1, 2, 2, 1]
    inst = generate(GeneratorSpec("number_partitioning", 6, params={"values": values}))
    assert inst.meta["constant"] == 100
    res = brute_force(inst.problem)
    assert res.optimum + inst.meta["constant"] == 0
    for x in res.minimizers:
        assert 2 * sum(v for v, b in zip(values, x) if b) == sum(values)


@pytest.mark.parametrize("family", sorted(SMALL))
def test_minimizers_satisfy_constraints(family):
    size, params = SMALL[family]
    for seed in range(3):
        inst = generate(GeneratorSpec(family, size, seed, params=params))
        res = brute_force(inst.problem)
        assert all(is_feasible(inst.meta, x) for x in res.minimizers), (family, seed)


@pytest.mark.parametrize("family", sorted(SMALL))
def test_deterministic_files(tmp_path, family):
    size, params = SMALL[family]
    suffix = ".pubo" if family == "sat3" else ".qubo"
    spec = GeneratorSpec(family, size, 5, params=params)
    a, b = tmp_path / f"a{suffix}", tmp_path / f"b{suffix}"
    save(generate(spec).problem, a)
    save(generate(spec).problem, b)
    assert a.read_bytes() == b.read_bytes()


def test_variable_counts():
    assert generate(GeneratorSpec("graph_coloring", 5, params={"colors": 3})).n == 15
    assert generate(GeneratorSpec("qap", 3)).n == 9
    assert generate(GeneratorSpec("tsp", 4)).n == 16
    assert generate(GeneratorSpec("nqueens", 5)).n == 25


def test_bad_specs():
    with pytest.raises(InfeasibleSpec):
        GeneratorSpec("sudoku", 4)
    with pytest.raises(InfeasibleSpec):
        GeneratorSpec("maxcut", 0)


def test_sat3_with_eight_solutions():
    inst = generate(GeneratorSpec("sat3", 20, 0, params={"clauses": 91, "solutions": 8}))
    assert isinstance(inst.problem, PuboProblem)
    assert len(inst.meta["clauses"]) == 91
    res = brute_force(inst.problem)
    assert res.optimum == 0 and len(res.minimizers) == 8
    assert any(x.tolist() == inst.meta["planted"] for x in res.minimizers)


def test_sat2_unique():
    for seed in range(10):
        inst = generate_sat2_unique(12, seed)
        res = brute_force(inst.problem)
        assert len(res.minimizers) == 1
        assert res.minimizers[0].tolist() == inst.meta["planted"]
        assert res.optimum + inst.meta["constant"] == 0
    inst = generate_sat2_unique(18, 0)
    assert inst.n == 18 and len(brute_force(inst.problem).minimizers) == 1


def test_save_load_round_trip(tmp_path, rng):
    p = generate(GeneratorSpec("random_qubo", 7, 2)).problem
    save(p, tmp_path / "p.qubo")
    assert load(tmp_path / "p.qubo") == p
    q = QuboProblem.from_entries(2, [(0, 1, 0.1), (1, 1, -1e-17)])
    save(q, tmp_path / "q.qubo")
    assert load(tmp_path / "q.qubo") == q
    s = generate(GeneratorSpec("sat3", 6, 1, params={"clauses": 10})).problem
    save(s, tmp_path / "s.pubo")
    assert load(tmp_path / "s.pubo") == s
    assert problem_hash(load(tmp_path / "s.pubo")) == problem_hash(s)


def test_load_sums_duplicates(tmp_path):
    f = tmp_path / "d.qubo"
    f.write_text("# comment\n2 3\n0 1 1.5\n0 1 0.5\n1 1 -1\n")
    assert load(f) == QuboProblem.from_entries(2, [(0, 1, 2.0), (1, 1, -1.0)])


@pytest.mark.parametrize("text,line,column", [
    ("2 1\n1 0 1.0\n", 2, 3),
    ("2 1\n0 2 1.0\n", 2, 3),
    ("2 2\n0 1 1.0\n", 1, 3),
    ("2 1\n0 1 x\n", 2, 1),
    ("two 1\n0 1 1\n", 1, 1),
    ("", None, None),
])
def test_parse_errors(tmp_path, text, line, column):
    f = tmp_path / "bad.qubo"
    f.write_text(text)
    with pytest.raises(ParseError) as info:
        load(f)
    assert info.value.line == line and info.value.column == column


def test_presets():
    presets = load_presets()
    sizes = [generate(spec).n for spec, _ in presets.values()]
    assert sizes == [4, 4, 4, 5, 5, 6, 6, 8, 9, 10, 15, 20, 25]
    assert "or-library" in presets["qubo-20"][1].lower()
