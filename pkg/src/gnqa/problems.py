"""Seeded benchmark generators and the ``.qubo`` / ``.pubo`` text formats.

Every generator returns an :class:`Instance`: the problem plus metadata
with the additive constant dropped from the polynomial, the penalty weight
and the hard constraints in linear form, so :func:`is_feasible` can check
any assignment. Penalty weights default to 1 + sum of absolute objective
coefficients, which exceeds any objective gain from breaking a constraint.
"""

from __future__ import annotations

import configparser
import hashlib
import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import GenerationTimeout, InfeasibleSpec, ParseError
from .model import PuboProblem, QuboProblem, brute_force

FAMILIES = ("maxcut", "number_partitioning", "set_packing", "set_partitioning",
            "min_vertex_cover", "knapsack", "max2sat", "graph_coloring", "qap", "tsp",
            "nqueens", "general01", "random_qubo", "sat2", "sat3")


@dataclass(frozen=True)
class GeneratorSpec:
    """Family tag, size and seed of a generated instance.

    ``size`` is the number of binary variables for most families; for
    graph coloring, QAP, TSP and N-queens it is the node/facility/city/board
    count and the variable count is derived from it. ``params`` holds
    family-specific options (see each generator).
    """

    family: str
    size: int
    seed: int = 0
    penalty: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InfeasibleSpec(f"unknown family {self.family!r}")
        if self.size < 1:
            raise InfeasibleSpec("size must be positive")


@dataclass(frozen=True, eq=False)
class Instance:
    problem: QuboProblem | PuboProblem
    meta: dict

    @property
    def n(self):
        return self.problem.n


class _Poly:
    """Accumulator for a binary polynomial, x_i^2 = x_i folded on the fly."""

    def __init__(self, n):
        self.n = n
        self.terms: dict[tuple, float] = {}
        self.const = 0.0

    def add(self, idx, v):
        key = tuple(sorted(set(idx)))
        if not key:
            self.const += v
        else:
            self.terms[key] = self.terms.get(key, 0.0) + v

    def add_square(self, coeffs: dict, rhs: float, weight: float):
        """weight * (sum_i a_i x_i - rhs)^2."""
        items = sorted(coeffs.items())
        self.const += weight * rhs * rhs
        for i, a in items:
            self.add((i,), weight * (a * a - 2.0 * rhs * a))
        for (i, a), (j, b) in itertools.combinations(items, 2):
            self.add((i, j), 2.0 * weight * a * b)

    def add_clause(self, lits, weight=1.0):
        """weight * prod(1 - l) for literals l = x_i (True) or 1 - x_i (False)."""
        expansion = {(): 1.0}
        for var, positive in lits:
            nxt = {}
            for key, c in expansion.items():
                if positive:
                    nxt[key] = nxt.get(key, 0.0) + c
                    k2 = key + (var,)
                    nxt[k2] = nxt.get(k2, 0.0) - c
                else:
                    k2 = key + (var,)
                    nxt[k2] = nxt.get(k2, 0.0) + c
            expansion = nxt
        for key, c in expansion.items():
            self.add(key, weight * c)

    def qubo(self) -> QuboProblem:
        entries = []
        for key, v in self.terms.items():
            if len(key) > 2:
                raise ValueError("term of degree > 2 in a QUBO")
            entries.append((key[0], key[-1], v))
        return QuboProblem.from_entries(self.n, entries)

    def pubo(self) -> PuboProblem:
        return PuboProblem.from_terms(self.n, list(self.terms.items()))


def _penalty(spec, objective_coeffs):
    if spec.penalty is not None:
        return float(spec.penalty)
    return 1.0 + float(sum(abs(c) for c in objective_coeffs))


def _random_edges(n, m, rng):
    pairs = list(itertools.combinations(range(n), 2))
    m = min(m, len(pairs))
    pick = rng.choice(len(pairs), size=m, replace=False)
    return sorted(pairs[k] for k in pick)


def _le(idx, coef, rhs):
    return ("<=", tuple(int(i) for i in idx), tuple(float(c) for c in coef), float(rhs))


def _eq(idx, coef, rhs):
    return ("==", tuple(int(i) for i in idx), tuple(float(c) for c in coef), float(rhs))


def _ge(idx, coef, rhs):
    return (">=", tuple(int(i) for i in idx), tuple(float(c) for c in coef), float(rhs))


def is_feasible(meta: dict, x) -> bool:
    """True if ``x`` satisfies every hard constraint recorded in ``meta``."""
    x = np.asarray(x)
    for sense, idx, coef, rhs in meta.get("constraints", ()):
        lhs = float(sum(c * x[i] for i, c in zip(idx, coef)))
        if sense == "==" and abs(lhs - rhs) > 1e-9:
            return False
        if sense == "<=" and lhs > rhs + 1e-9:
            return False
        if sense == ">=" and lhs < rhs - 1e-9:
            return False
    return True


def _maxcut(spec, rng):
    """Unweighted max cut: minimize -(cut size). params: edges."""
    n = spec.size
    m = int(spec.params.get("edges", min(n * (n - 1) // 2, max(n, round(2.4 * n)))))
    edges = _random_edges(n, m, rng)
    poly = _Poly(n)
    for i, j in edges:
        poly.add((i,), -1.0)
        poly.add((j,), -1.0)
        poly.add((i, j), 2.0)
    return poly.qubo(), {"edges": edges, "constant": 0.0, "constraints": []}


def _number_partitioning(spec, rng):
    """(c - 2 sum s_j x_j)^2 with c = sum s; params: values or high."""
    values = spec.params.get("values")
    if values is None:
        values = rng.integers(1, int(spec.params.get("high", 20)) + 1, size=spec.size)
    values = [int(v) for v in values]
    c = sum(values)
    poly = _Poly(len(values))
    poly.add_square({j: 2.0 * s for j, s in enumerate(values)}, c, 1.0)
    return poly.qubo(), {"values": values, "constant": poly.const, "constraints": []}


def _set_packing(spec, rng):
    """Maximize the number (or weight) of pairwise-disjoint chosen sets.

    params: universe (default n), set_size (default 2), weights.
    """
    n = spec.size
    universe = int(spec.params.get("universe", n))
    size = int(spec.params.get("set_size", 2))
    weights = [float(w) for w in spec.params.get("weights", [1.0] * n)]
    sets = [sorted(rng.choice(universe, size=min(size, universe), replace=False).tolist())
            for _ in range(n)]
    P = _penalty(spec, weights)
    poly = _Poly(n)
    cons = []
    for j, w in enumerate(weights):
        poly.add((j,), -w)
    for a, b in itertools.combinations(range(n), 2):
        if set(sets[a]) & set(sets[b]):
            poly.add((a, b), P)
            cons.append(_le((a, b), (1, 1), 1))
    return poly.qubo(), {"sets": sets, "penalty": P, "constant": 0.0, "constraints": cons}


def _set_partitioning(spec, rng):
    """Cover each element exactly once at minimum cost.

    A random partition of the universe is planted so a feasible choice
    exists; the other sets are random. params: universe, high (cost bound).
    """
    n = spec.size
    universe = int(spec.params.get("universe", max(2, n // 2 + 1)))
    k = int(spec.params.get("planted", max(1, n // 3)))
    labels = rng.integers(0, k, size=universe)
    labels[:k] = np.arange(k)
    planted = [sorted(np.flatnonzero(labels == b).tolist()) for b in range(k)]
    sets = list(planted)
    while len(sets) < n:
        m = int(rng.integers(1, universe + 1))
        sets.append(sorted(rng.choice(universe, size=m, replace=False).tolist()))
    order = rng.permutation(n)
    sets = [sets[o] for o in order]
    costs = [float(c) for c in rng.integers(1, int(spec.params.get("high", 10)) + 1, size=n)]
    P = _penalty(spec, costs)
    poly = _Poly(n)
    cons = []
    for j, c in enumerate(costs):
        poly.add((j,), c)
    for e in range(universe):
        members = [j for j, s in enumerate(sets) if e in s]
        if not members:
            raise InfeasibleSpec(f"element {e} is in no set")
        poly.add_square({j: 1.0 for j in members}, 1.0, P)
        cons.append(_eq(members, [1] * len(members), 1))
    return poly.qubo(), {"sets": sets, "costs": costs, "penalty": P,
                         "constant": poly.const, "constraints": cons}


def _min_vertex_cover(spec, rng):
    """Smallest vertex set touching every edge. params: edges."""
    n = spec.size
    m = int(spec.params.get("edges", max(n - 1, round(1.5 * n))))
    edges = _random_edges(n, m, rng)
    P = _penalty(spec, [1.0] * n)
    poly = _Poly(n)
    for i in range(n):
        poly.add((i,), 1.0)
    for i, j in edges:
        poly.add_clause([(i, True), (j, True)], P)
    cons = [_ge((i, j), (1, 1), 1) for i, j in edges]
    return poly.qubo(), {"edges": edges, "penalty": P, "constant": poly.const,
                         "constraints": cons}


def _knapsack(spec, rng):
    """0/1 knapsack with binary slack bits: N = items + slack bits.

    Maximize sum v x subject to sum w x <= W, encoded as
    P (W - sum w x - sum 2^k y_k)^2. params: slack_bits, high.
    """
    n = spec.size
    b = int(spec.params.get("slack_bits", max(1, n // 2 - 1)))
    items = n - b
    if items < 1:
        raise InfeasibleSpec("knapsack needs at least one item variable")
    capacity = (1 << b) - 1
    weights = [int(w) for w in rng.integers(1, capacity + 1, size=items)]
    values = [float(v) for v in rng.integers(1, int(spec.params.get("high", 10)) + 1,
                                             size=items)]
    P = _penalty(spec, values)
    poly = _Poly(n)
    for i, v in enumerate(values):
        poly.add((i,), -v)
    coeffs = {i: float(w) for i, w in enumerate(weights)}
    coeffs.update({items + k: float(1 << k) for k in range(b)})
    poly.add_square(coeffs, capacity, P)
    cons = [_le(range(items), weights, capacity),
            _eq(list(coeffs), list(coeffs.values()), capacity)]
    return poly.qubo(), {"weights": weights, "values": values, "capacity": capacity,
                         "items": items, "penalty": P, "constant": poly.const,
                         "constraints": cons}


def _random_clauses(n, m, k, rng, planted=None):
    clauses = []
    while len(clauses) < m:
        vars_ = sorted(rng.choice(n, size=k, replace=False).tolist())
        signs = rng.integers(0, 2, size=k).astype(bool).tolist()
        if planted is not None and not any(planted[v] == s for v, s in zip(vars_, signs)):
            continue
        clauses.append(tuple(zip(vars_, signs)))
    return clauses


def _clause_poly(n, clauses):
    poly = _Poly(n)
    for cl in clauses:
        poly.add_clause(cl)
    return poly


def _max2sat(spec, rng):
    """Number of violated 2-clauses. params: clauses (default 3n)."""
    n = spec.size
    m = int(spec.params.get("clauses", 3 * n))
    clauses = _random_clauses(n, m, 2, rng)
    poly = _clause_poly(n, clauses)
    return poly.qubo(), {"clauses": clauses, "constant": poly.const, "constraints": []}


def _graph_coloring(spec, rng):
    """Proper coloring feasibility; variable v * colors + c means node v has color c.

    params: colors (default 3), edges. ``size`` is the node count.
    """
    nodes = spec.size
    colors = int(spec.params.get("colors", 3))
    m = int(spec.params.get("edges", nodes))
    edges = _random_edges(nodes, m, rng)
    n = nodes * colors
    P = _penalty(spec, [])
    poly = _Poly(n)
    cons = []
    for v in range(nodes):
        idx = [v * colors + c for c in range(colors)]
        poly.add_square({i: 1.0 for i in idx}, 1.0, P)
        cons.append(_eq(idx, [1] * colors, 1))
    for u, v in edges:
        for c in range(colors):
            poly.add((u * colors + c, v * colors + c), P)
            cons.append(_le((u * colors + c, v * colors + c), (1, 1), 1))
    return poly.qubo(), {"edges": edges, "colors": colors, "nodes": nodes,
                         "penalty": P, "constant": poly.const, "constraints": cons}


def _assignment_constraints(poly, k, P):
    cons = []
    for a in range(k):
        row = [a * k + b for b in range(k)]
        col = [b * k + a for b in range(k)]
        poly.add_square({i: 1.0 for i in row}, 1.0, P)
        poly.add_square({i: 1.0 for i in col}, 1.0, P)
        cons += [_eq(row, [1] * k, 1), _eq(col, [1] * k, 1)]
    return cons


def _qap(spec, rng):
    """Quadratic assignment; variable i * k + a puts facility i at location a.

    params: high (flow/distance bound).
    """
    k = spec.size
    high = int(spec.params.get("high", 9))
    flow = np.triu(rng.integers(0, high + 1, size=(k, k)), 1)
    flow = flow + flow.T
    pts = rng.integers(0, high + 1, size=(k, 2))
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1)
    coeffs = []
    obj = {}
    for i, j in itertools.permutations(range(k), 2):
        for a, b in itertools.permutations(range(k), 2):
            v = float(flow[i, j] * dist[a, b])
            if v:
                key = tuple(sorted((i * k + a, j * k + b)))
                obj[key] = obj.get(key, 0.0) + v
    coeffs = list(obj.values())
    P = _penalty(spec, coeffs)
    poly = _Poly(k * k)
    for key, v in obj.items():
        poly.add(key, v)
    cons = _assignment_constraints(poly, k, P)
    return poly.qubo(), {"flow": flow.tolist(), "dist": dist.tolist(), "penalty": P,
                         "constant": poly.const, "constraints": cons}


def _tsp(spec, rng):
    """Tour as a permutation matrix; variable c * k + t visits city c at step t."""
    k = spec.size
    pts = rng.random((k, 2))
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    obj = {}
    for u, v in itertools.permutations(range(k), 2):
        for t in range(k):
            key = tuple(sorted((u * k + t, v * k + (t + 1) % k)))
            obj[key] = obj.get(key, 0.0) + float(dist[u, v])
    P = _penalty(spec, [dist.max() * k])
    poly = _Poly(k * k)
    for key, v in obj.items():
        poly.add(key, v)
    cons = _assignment_constraints(poly, k, P)
    return poly.qubo(), {"points": pts.tolist(), "penalty": P, "constant": poly.const,
                         "constraints": cons}


def _nqueens(spec, rng):
    """k non-attacking queens on a k x k board; variable r * k + c."""
    k = spec.size
    P = _penalty(spec, [])
    poly = _Poly(k * k)
    cons = _assignment_constraints(poly, k, P)
    for (r1, c1), (r2, c2) in itertools.combinations(itertools.product(range(k), repeat=2), 2):
        if r1 != r2 and c1 != c2 and abs(r1 - r2) == abs(c1 - c2):
            poly.add((r1 * k + c1, r2 * k + c2), P)
            cons.append(_le((r1 * k + c1, r2 * k + c2), (1, 1), 1))
    return poly.qubo(), {"penalty": P, "constant": poly.const, "constraints": cons}


def _general01(spec, rng):
    """min c.x subject to A x = b with a planted feasible x.

    params: rows (default n // 3), high.
    """
    n = spec.size
    rows = int(spec.params.get("rows", max(1, n // 3)))
    high = int(spec.params.get("high", 5))
    c = rng.integers(-high, high + 1, size=n).astype(float)
    A = rng.integers(0, 3, size=(rows, n))
    x0 = rng.integers(0, 2, size=n)
    b = A @ x0
    P = _penalty(spec, c)
    poly = _Poly(n)
    for j, v in enumerate(c):
        poly.add((j,), float(v))
    cons = []
    for r in range(rows):
        idx = np.flatnonzero(A[r])
        poly.add_square({int(j): float(A[r, j]) for j in idx}, float(b[r]), P)
        cons.append(_eq(idx, A[r, idx], b[r]))
    return poly.qubo(), {"c": c.tolist(), "A": A.tolist(), "b": b.tolist(), "penalty": P,
                         "constant": poly.const, "constraints": cons}


def _random_qubo(spec, rng):
    """Integer entries uniform in [-high, high] with the given density."""
    n = spec.size
    density = float(spec.params.get("density", 1.0))
    high = int(spec.params.get("high", 100))
    rows, cols = np.triu_indices(n)
    keep = rng.random(rows.size) < density
    vals = rng.integers(-high, high + 1, size=int(keep.sum())).astype(float)
    entries = zip(rows[keep].tolist(), cols[keep].tolist(), vals.tolist())
    return QuboProblem.from_entries(n, entries), {"constant": 0.0, "constraints": []}


def _sat2(spec, rng):
    """Random satisfiable 2-SAT around a planted assignment."""
    n = spec.size
    m = int(spec.params.get("clauses", 3 * n))
    planted = rng.integers(0, 2, size=n).astype(bool)
    clauses = _random_clauses(n, m, 2, rng, planted)
    poly = _clause_poly(n, clauses)
    return poly.qubo(), {"clauses": clauses, "planted": planted.astype(int).tolist(),
                         "constant": poly.const, "constraints": []}


def _sat3(spec, rng):
    """Planted 3-SAT as a cubic PUBO counting violated clauses.

    The constant term is kept, so satisfying assignments have value 0.

    params: clauses (default 91), solutions (exact count to enforce by
    enumeration, default none), max_tries.
    """
    n = spec.size
    m = int(spec.params.get("clauses", 91))
    want = spec.params.get("solutions")
    tries = int(spec.params.get("max_tries", 2000))
    planted = rng.integers(0, 2, size=n).astype(bool)
    for _ in range(tries):
        clauses = _random_clauses(n, m, 3, rng, planted)
        poly = _clause_poly(n, clauses)
        problem = PuboProblem.from_terms(n, [((), poly.const), *poly.terms.items()])
        if want is None:
            break
        res = brute_force(problem)
        if abs(res.optimum) < 1e-9 and len(res.minimizers) == int(want):
            break
    else:
        raise GenerationTimeout(f"no {m}-clause instance with {want} solutions "
                                f"after {tries} tries")
    return problem, {"clauses": clauses, "planted": planted.astype(int).tolist(),
                     "constant": 0.0, "constraints": []}


_GENERATORS = {
    "maxcut": _maxcut, "number_partitioning": _number_partitioning,
    "set_packing": _set_packing, "set_partitioning": _set_partitioning,
    "min_vertex_cover": _min_vertex_cover, "knapsack": _knapsack, "max2sat": _max2sat,
    "graph_coloring": _graph_coloring, "qap": _qap, "tsp": _tsp, "nqueens": _nqueens,
    "general01": _general01, "random_qubo": _random_qubo, "sat2": _sat2, "sat3": _sat3,
}


def generate(spec: GeneratorSpec) -> Instance:
    """Build the instance described by ``spec``; deterministic in the seed.

    ``meta["constant"]`` is the additive constant dropped from the
    polynomial (the full objective is polynomial + constant).
    """
    rng = np.random.default_rng(spec.seed)
    problem, meta = _GENERATORS[spec.family](spec, rng)
    meta = {"family": spec.family, "size": spec.size, "seed": spec.seed, **meta}
    return Instance(problem, meta)


def generate_sat2_unique(n: int = 18, seed: int = 0, clauses: int | None = None,
                         max_tries: int = 200) -> Instance:
    """Planted 2-SAT whose only satisfying assignment is the planted one.

    Clause sets are drawn around a planted assignment and enumerated; draws
    with more than one minimizer are discarded.
    """
    rng = np.random.default_rng(seed)
    m = clauses if clauses is not None else 3 * n
    for attempt in range(max_tries):
        planted = rng.integers(0, 2, size=n).astype(bool)
        cl = _random_clauses(n, m, 2, rng, planted)
        poly = _clause_poly(n, cl)
        problem = poly.qubo()
        res = brute_force(problem)
        if len(res.minimizers) == 1:
            meta = {"family": "sat2", "size": n, "seed": seed, "clauses": cl,
                    "planted": planted.astype(int).tolist(), "constant": poly.const,
                    "constraints": [], "attempts": attempt + 1}
            return Instance(problem, meta)
    raise GenerationTimeout(f"no unique-solution 2-SAT instance after {max_tries} tries")


# presets -------------------------------------------------------------------

def load_presets(path=None) -> dict:
    """Read the preset catalog (INI) into ``{name: (GeneratorSpec, note)}``."""
    parser = configparser.ConfigParser()
    if path is None:
        parser.read_string(resources.files("gnqa").joinpath("presets.ini").read_text())
    else:
        parser.read(path)
    out = {}
    for name in parser.sections():
        sec = dict(parser[name])
        family = sec.pop("family")
        size = int(sec.pop("size"))
        seed = int(sec.pop("seed", 0))
        penalty = sec.pop("penalty", None)
        note = sec.pop("note", "")
        params = {k: _param(v) for k, v in sec.items()}
        spec = GeneratorSpec(family, size, seed,
                             None if penalty is None else float(penalty), params)
        out[name] = (spec, note)
    return out


def _param(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


# file formats --------------------------------------------------------------

def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 2 ** 53 else repr(float(v))


def save(problem, path):
    """Write ``.qubo`` (``i j v`` lines) or ``.pubo`` (``d i1 .. id v`` lines)."""
    path = Path(path)
    lines = []
    if isinstance(problem, QuboProblem):
        lines.append(f"{problem.n} {len(problem.entries)}")
        lines += [f"{i} {j} {_fmt(v)}" for i, j, v in problem.entries]
    else:
        lines.append(f"{problem.n} {len(problem.terms)}")
        lines += [" ".join([str(len(idx)), *map(str, idx), _fmt(v)])
                  for idx, v in problem.terms]
    path.write_text("\n".join(lines) + "\n")


def _tokens(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        if body.strip():
            yield lineno, raw, body.split()


def _col(raw, token, start=0):
    return raw.find(token, start) + 1


def load(path):
    """Parse a ``.qubo`` or ``.pubo`` file (chosen by suffix).

    Duplicate entries are summed. Errors carry the 1-based line and column.
    """
    path = Path(path)
    text = path.read_text()
    rows = list(_tokens(text))
    pubo = path.suffix.lower() == ".pubo"
    if not rows:
        raise ParseError("empty file", path=str(path))
    lineno, raw, head = rows[0]
    if len(head) != 2:
        raise ParseError("header must be 'N K'", line=lineno, column=1, path=str(path))
    try:
        n, k = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("header must hold two integers", line=lineno, column=1,
                         path=str(path)) from None
    body = rows[1:]
    if len(body) != k:
        raise ParseError(f"header announces {k} entries, found {len(body)}",
                         line=lineno, column=_col(raw, head[1], raw.find(head[0]) + len(head[0])),
                         path=str(path))
    items = []
    for lineno, raw, tok in body:
        def fail(msg, t=None):
            raise ParseError(msg, line=lineno, column=_col(raw, t) if t else 1,
                             path=str(path))
        try:
            if pubo:
                deg = int(tok[0])
                if len(tok) != deg + 2:
                    fail(f"expected {deg} indices and a value")
                idx = [int(t) for t in tok[1:-1]]
                v = float(tok[-1])
            else:
                if len(tok) != 3:
                    fail("expected 'i j v'")
                idx = [int(tok[0]), int(tok[1])]
                v = float(tok[2])
        except ValueError as exc:
            fail(f"bad number: {exc}")
        for t, i in zip(tok[1:] if pubo else tok, idx):
            if not 0 <= i < n:
                fail(f"index {i} out of range for N={n}", t)
        if any(b < a for a, b in zip(idx, idx[1:])):
            fail("indices must be non-decreasing (i <= j)", tok[2 if pubo else 1])
        if pubo and len(set(idx)) != len(idx):
            fail("repeated index in a term", tok[1])
        items.append((idx, v))
    if pubo:
        return PuboProblem.from_terms(n, [(tuple(i), v) for i, v in items])
    return QuboProblem.from_entries(n, [(i[0], i[1], v) for i, v in items])


def problem_hash(problem) -> str:
    rows = problem.entries if isinstance(problem, QuboProblem) else problem.terms
    return hashlib.sha256(repr((problem.n, rows)).encode()).hexdigest()[:16]
