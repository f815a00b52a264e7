"""Exact simulation over the 2**n computational basis.

Everything here is real: the tensor-product ansatz has real amplitudes and
the Hamiltonians are diagonal. Reductions go through ``np.sum`` (pairwise
summation) so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from ._fallback import poly_values
from .errors import DimensionMismatch
from .model import (IsingHamiltonian, PuboProblem, QuboProblem, SpinPolynomial,
                    check_desk, to_ising, to_spin)


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """Eigenvalues of a diagonal operator in computational-basis order."""

    d: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.d, dtype=np.float64)
        if d.ndim != 1 or d.size == 0 or d.size & (d.size - 1):
            raise ValueError("diagonal length must be a power of two")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.size.bit_length() - 1

    def __len__(self):
        return self.d.size


@dataclass(frozen=True, eq=False)
class DenseState:
    amp: np.ndarray

    @property
    def n(self) -> int:
        return self.amp.size.bit_length() - 1

    def __len__(self):
        return self.amp.size


def _arr(x):
    if isinstance(x, DenseState):
        return x.amp
    if isinstance(x, DiagonalOperator):
        return x.d
    return np.asarray(x, dtype=np.float64)


def build_diagonal(p, limit=None) -> DiagonalOperator:
    """Diagonal of the spin Hamiltonian of ``p``.

    Quadratic inputs go through the compiled/numpy kernel; higher-order
    spin polynomials through the block-split evaluator.
    """
    check_desk(p.n, limit)
    if isinstance(p, QuboProblem):
        p = to_ising(p)
    if isinstance(p, IsingHamiltonian):
        return DiagonalOperator(_backend.kernels.spin_diagonal(p.n, p.h, p.qi, p.qj, p.qv))
    if isinstance(p, PuboProblem):
        p = to_spin(p)
    if isinstance(p, SpinPolynomial):
        return DiagonalOperator(poly_values(p.n, list(p.terms), spin=True))
    raise TypeError(f"cannot build a diagonal from {type(p).__name__}")


def _product(c, s):
    """Tensor product of (c_k, s_k) factors; factor 0 is the lowest bit."""
    out = np.array([1.0])
    for ck, sk in zip(c, s):
        out = np.concatenate([ck * out, sk * out])
    return out


def _product_split(c, s):
    a = len(c) // 2
    if a < 6:
        return _product(c, s)
    lo = _product(c[:a], s[:a])
    hi = _product(c[a:], s[a:])
    return np.outer(hi, lo).ravel()


def build_state(theta, limit=None) -> DenseState:
    theta = np.asarray(theta, dtype=float)
    check_desk(theta.size, limit)
    return DenseState(_product_split(np.cos(theta), np.sin(theta)))


def shifted_state(theta, k, delta, limit=None) -> DenseState:
    theta = np.array(theta, dtype=float)
    if not 0 <= k < theta.size:
        raise IndexError(f"parameter index {k} out of range for n={theta.size}")
    theta[k] += delta
    return build_state(theta, limit)


def expectation(state, op) -> float:
    a, d = _arr(state), _arr(op)
    if a.shape != d.shape:
        raise DimensionMismatch(f"state has {a.size} amplitudes, operator {d.size}")
    return float(np.sum(a * a * d))


def overlap(a, b) -> float:
    a, b = _arr(a), _arr(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"states of length {a.size} and {b.size}")
    return float(np.sum(a * b))


def _pullback(vec, c, s):
    m = len(c)
    if m == 1:
        return np.array([-s[0] * vec[0] + c[0] * vec[1]])
    a = m // 2
    T = vec.reshape(1 << (m - a), 1 << a)
    lo = _product(c[:a], s[:a])
    hi = _product(c[a:], s[a:])
    return np.concatenate([_pullback(hi @ T, c[:a], s[:a]),
                           _pullback(T @ lo, c[a:], s[a:])])


def jacobian_pullback(theta, target, limit=None) -> np.ndarray:
    """y_k = <d_k phi(theta) | target> for all k.

    The target is contracted against the product factors of one half of the
    qubits at a time (two matrix-vector products per level), so the cost is
    O(2**n) rather than n full-state overlaps.
    """
    theta = np.asarray(theta, dtype=float)
    check_desk(theta.size, limit)
    t = _arr(target)
    if t.size != 1 << theta.size:
        raise DimensionMismatch(f"target has {t.size} amplitudes, expected 2**{theta.size}")
    if theta.size == 0:
        return np.zeros(0)
    return _pullback(t, np.cos(theta), np.sin(theta))
