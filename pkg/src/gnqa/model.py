"""Problem containers, Ising conversion and the brute-force oracle.

Bit convention used throughout the package: variable k is bit k of a basis
index (little-endian), x_k = 1 corresponds to spin s_k = -1, i.e.
x = (1 - s) / 2.
"""

from __future__ import annotations

import os
from collections import namedtuple
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import DeskLimitExceeded

DEFAULT_DESK_LIMIT = 26


def desk_limit() -> int:
    """Largest n for which 2**n vectors are materialized (env GNQA_DESK_LIMIT)."""
    value = os.environ.get("GNQA_DESK_LIMIT")
    if value:
        return int(value)
    return DEFAULT_DESK_LIMIT


def check_desk(n, limit=None):
    limit = desk_limit() if limit is None else limit
    if n > limit:
        raise DeskLimitExceeded(n, limit)


@dataclass(frozen=True)
class QuboProblem:
    """Minimize x^T Q x over binary x with Q upper triangular.

    ``entries`` holds the nonzero (i, j, v) with i <= j, sorted and free of
    duplicates. Use :meth:`from_entries` to build one from raw triples
    (duplicates are summed).
    """

    n: int
    entries: tuple = ()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        seen = set()
        for i, j, _ in self.entries:
            if not (0 <= i <= j < self.n):
                raise ValueError(f"entry ({i}, {j}) violates 0 <= i <= j < n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate entry ({i}, {j})")
            seen.add((i, j))

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[Sequence]) -> "QuboProblem":
        acc: dict[tuple[int, int], float] = {}
        for i, j, v in entries:
            i, j = int(i), int(j)
            if i > j:
                raise ValueError(f"entry ({i}, {j}) is below the diagonal")
            acc[(i, j)] = acc.get((i, j), 0.0) + float(v)
        items = sorted((i, j, v) for (i, j), v in acc.items() if v != 0.0)
        return cls(n, tuple(items))

    @classmethod
    def from_matrix(cls, Q) -> "QuboProblem":
        """Fold an arbitrary square matrix onto its upper triangle."""
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        U = np.triu(Q) + np.tril(Q, -1).T
        rows, cols = np.nonzero(U)
        return cls.from_entries(n, zip(rows, cols, U[rows, cols]))

    @property
    def kappa(self) -> int:
        return len(self.entries)

    def arrays(self):
        """Return (diag, qi, qj, qv): linear coefficients and strict-upper COO."""
        return self._arrays

    @cached_property
    def _arrays(self):
        diag = np.zeros(self.n)
        off = [(i, j, v) for i, j, v in self.entries if i != j]
        for i, j, v in self.entries:
            if i == j:
                diag[i] = v
        qi = np.array([e[0] for e in off], dtype=np.int64)
        qj = np.array([e[1] for e in off], dtype=np.int64)
        qv = np.array([e[2] for e in off], dtype=np.float64)
        return diag, qi, qj, qv

    def to_matrix(self) -> np.ndarray:
        Q = np.zeros((self.n, self.n))
        for i, j, v in self.entries:
            Q[i, j] = v
        return Q

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        diag, qi, qj, qv = self._arrays
        return float(diag @ x + qv @ (x[qi] * x[qj]))

    def as_pubo(self) -> "PuboProblem":
        return PuboProblem.from_terms(
            self.n, [((i,) if i == j else (i, j), v) for i, j, v in self.entries])


@dataclass(frozen=True)
class PuboProblem:
    """Minimize sum_S c_S prod_{i in S} x_i over binary x."""

    n: int
    terms: tuple = ()

    def __post_init__(self):
        seen = set()
        for idx, _ in self.terms:
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"term indices {idx} are not strictly increasing")
            if idx and not (0 <= idx[0] and idx[-1] < self.n):
                raise ValueError(f"term indices {idx} out of range for n={self.n}")
            if idx in seen:
                raise ValueError(f"duplicate term {idx}")
            seen.add(idx)

    @classmethod
    def from_terms(cls, n: int, terms: Iterable) -> "PuboProblem":
        """Canonicalize raw terms; repeated variables collapse since x^2 = x."""
        acc: dict[tuple, float] = {}
        for idx, v in terms:
            key = tuple(sorted(set(int(i) for i in idx)))
            acc[key] = acc.get(key, 0.0) + float(v)
        items = sorted(((k, v) for k, v in acc.items() if v != 0.0),
                       key=lambda t: (len(t[0]), t[0]))
        return cls(n, tuple(items))

    @property
    def degree(self) -> int:
        return max((len(idx) for idx, _ in self.terms), default=0)

    def evaluate(self, x) -> float:
        x = np.asarray(x)
        return float(sum(v for idx, v in self.terms if all(x[i] for i in idx)))


@dataclass(frozen=True, eq=False)
class IsingHamiltonian:
    """H = sum_i h_i s_i + sum_{i<j} q_ij s_i s_j, plus the scalar offset H0.

    For a QUBO, x^T Q x = (H(s) - H0) / 4.
    """

    n: int
    h: np.ndarray
    qi: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    qj: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    qv: np.ndarray = field(default_factory=lambda: np.zeros(0))
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h", np.ascontiguousarray(self.h, dtype=np.float64))
        object.__setattr__(self, "qi", np.ascontiguousarray(self.qi, dtype=np.int64))
        object.__setattr__(self, "qj", np.ascontiguousarray(self.qj, dtype=np.int64))
        object.__setattr__(self, "qv", np.ascontiguousarray(self.qv, dtype=np.float64))
        if self.h.shape != (self.n,):
            raise ValueError("h must have length n")
        if np.any(self.qi >= self.qj):
            raise ValueError("couplings must satisfy i < j")

    @property
    def q(self) -> dict:
        return {(int(i), int(j)): float(v) for i, j, v in zip(self.qi, self.qj, self.qv)}

    def coupling_matvec(self, w) -> np.ndarray:
        return _backend.kernels.sym_coupling_matvec(self.n, self.qi, self.qj, self.qv,
                                                    np.ascontiguousarray(w, dtype=np.float64))

    def to_spin(self) -> "SpinPolynomial":
        terms = [((k,), float(v)) for k, v in enumerate(self.h) if v != 0.0]
        terms += [((int(i), int(j)), float(v)) for i, j, v in zip(self.qi, self.qj, self.qv)]
        return SpinPolynomial(self.n, tuple(terms), self.offset)


@dataclass(frozen=True)
class SpinPolynomial:
    """Diagonal Hamiltonian sum_T c_T prod_{i in T} s_i without a constant term.

    This is the PUBO analogue of :class:`IsingHamiltonian`; the original
    objective is recovered as (H - offset) / 4.
    """

    n: int
    terms: tuple = ()
    offset: float = 0.0

    @property
    def degree(self) -> int:
        return max((len(idx) for idx, _ in self.terms), default=0)


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray
    lambda0: float
    degeneracy: int

    @classmethod
    def from_diagonal(cls, d, rtol=1e-9) -> "Spectrum":
        d = np.asarray(getattr(d, "d", d), dtype=float)
        lam0 = float(d.min())
        tol = rtol * max(1.0, abs(lam0))
        return cls(np.sort(d), lam0, int(np.count_nonzero(d <= lam0 + tol)))


def to_ising(p: QuboProblem) -> IsingHamiltonian:
    diag, qi, qj, qv = p.arrays()
    h = -2.0 * diag
    h -= np.bincount(qi, weights=qv, minlength=p.n)
    h -= np.bincount(qj, weights=qv, minlength=p.n)
    h0 = -2.0 * diag.sum() - qv.sum()
    return IsingHamiltonian(p.n, h, qi, qj, qv, float(h0))


def to_spin(p) -> SpinPolynomial:
    """Spin form of a QUBO/PUBO (or pass-through for Hamiltonians).

    Each monomial prod x_i becomes 2^-|S| prod (1 - s_i); the result is
    scaled by 4 and the constant part moved into the offset, so that a
    quadratic problem gives exactly the coefficients of :func:`to_ising`.
    """
    if isinstance(p, SpinPolynomial):
        return p
    if isinstance(p, IsingHamiltonian):
        return p.to_spin()
    if isinstance(p, QuboProblem):
        return to_ising(p).to_spin()
    acc: dict[tuple, float] = {}
    mean = 0.0
    for idx, c in p.terms:
        k = len(idx)
        scale = 4.0 * c / 2 ** k
        mean += c / 2 ** k
        for mask in range(1, 1 << k):
            sub = tuple(idx[b] for b in range(k) if mask >> b & 1)
            sign = -1.0 if len(sub) % 2 else 1.0
            acc[sub] = acc.get(sub, 0.0) + sign * scale
    terms = tuple(sorted(((t, v) for t, v in acc.items() if v != 0.0),
                         key=lambda t: (len(t[0]), t[0])))
    return SpinPolynomial(p.n, terms, -4.0 * mean)


def hamiltonian_stats(H):
    """Return (trace, frobenius, variance) of the diagonal Hamiltonian.

    Closed forms, O(kappa + n): the trace of any non-constant spin monomial
    vanishes, and distinct monomials are orthogonal so the variance of the
    diagonal is the sum of squared coefficients.
    """
    if isinstance(H, IsingHamiltonian):
        var = float(np.dot(H.h, H.h) + np.dot(H.qv, H.qv))
    else:
        var = float(sum(c * c for _, c in to_spin(H).terms))
    return 0.0, float(2.0 ** (H.n / 2) * np.sqrt(var)), var


BruteForceResult = namedtuple("BruteForceResult", "optimum minimizers")


def objective_table(p, limit=None) -> np.ndarray:
    """Objective value of every binary assignment, indexed little-endian."""
    check_desk(p.n, limit)
    if isinstance(p, QuboProblem):
        diag, qi, qj, qv = p.arrays()
        return _backend.kernels.binary_values(p.n, diag, qi, qj, qv)
    from ._fallback import poly_values
    return poly_values(p.n, list(p.terms), spin=False)


def decode(indices, n) -> np.ndarray:
    indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    return ((indices[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)


def brute_force(p, limit=None, rtol=1e-9) -> BruteForceResult:
    """Exact minimum by enumeration of all 2**n assignments.

    Returns every minimizer (rows of a uint8 array); values within
    ``rtol * max(1, |optimum|)`` of the optimum count as ties.
    """
    values = objective_table(p, limit)
    opt = float(values.min())
    tol = rtol * max(1.0, abs(opt))
    idx = np.flatnonzero(values <= opt + tol)
    return BruteForceResult(opt, decode(idx, p.n))


def pubo_reduce_check(p) -> dict:
    """Degree report for a polynomial problem.

    No quadratization is ever performed; the diagonal simulator consumes
    higher-order terms directly.
    """
    terms = p.as_pubo().terms if isinstance(p, QuboProblem) else p.terms
    degree = max((len(idx) for idx, _ in terms), default=0)
    return {
        "degree": degree,
        "quadratic": degree <= 2,
        "constant_only": degree == 0,
        "quadratized": False,
    }
