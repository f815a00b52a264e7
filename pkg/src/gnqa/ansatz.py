"""Closed-form quantities of the tensor-product state, all O(kappa + n).

With c_k = cos 2θ_k and s_k = sin 2θ_k, each spin expectation factorizes,
<s_k> = c_k, so for an Ising Hamiltonian

    L(θ)   = h·c + sum_{i<j} q_ij c_i c_j
    ∇L_j   = -2 s_j F_j,          F = h + J c   (local field)
    Y_jj   = -4 c_j F_j,          Y_jk = 4 q_jk s_j s_k

which are the upper-triangular QUBO formulas rewritten with the Ising field
(F_j = -(2 q_jj + sum_k q~_jk (1 - c_k)) for QUBO-derived h).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DeskLimitExceeded, DimensionMismatch, UnresolvedParameter
from .model import IsingHamiltonian, QuboProblem, to_ising, to_spin

ROUND_TOL = 1e-9
MAX_DENSE = 4096


def _theta(H, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (H.n,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, expected ({H.n},)")
    return theta


def _ising(H):
    if isinstance(H, QuboProblem):
        return to_ising(H)
    return H


def objective(H, theta) -> float:
    """L(θ) = <φ(θ)|H|φ(θ)>; accepts Ising Hamiltonians and spin polynomials."""
    H = _ising(H)
    theta = _theta(H, theta)
    c = np.cos(2.0 * theta)
    if isinstance(H, IsingHamiltonian):
        return float(H.h @ c + H.qv @ (c[H.qi] * c[H.qj]))
    total = 0.0
    for idx, coef in to_spin(H).terms:
        total += coef * np.prod(c[list(idx)])
    return float(total)


def local_field(H: IsingHamiltonian, theta) -> np.ndarray:
    return H.h + H.coupling_matvec(np.cos(2.0 * _theta(H, theta)))


def gradient(H, theta) -> np.ndarray:
    H = _ising(H)
    theta = _theta(H, theta)
    return -2.0 * np.sin(2.0 * theta) * local_field(H, theta)


def hessian_diagonal(H, theta) -> np.ndarray:
    H = _ising(H)
    theta = _theta(H, theta)
    return -4.0 * np.cos(2.0 * theta) * local_field(H, theta)


def hessian_matvec(H, theta, v, *, diag_scale=1.0, off_scale=1.0, shift=0.0,
                   field=None) -> np.ndarray:
    """Return (diag_scale*Y0 + off_scale*Y1 + shift*I) v.

    Y0 and Y1 are the diagonal and off-diagonal parts of the Hessian of L.
    The defaults give Y v. ``field`` may carry a precomputed local field
    when the same θ is used for many products (Krylov inner loops).
    """
    H = _ising(H)
    theta = _theta(H, theta)
    v = np.asarray(v, dtype=float)
    if v.shape != theta.shape:
        raise DimensionMismatch(f"v has shape {v.shape}, expected {theta.shape}")
    c = np.cos(2.0 * theta)
    s = np.sin(2.0 * theta)
    if field is None:
        field = H.h + H.coupling_matvec(c)
    out = (-4.0 * diag_scale) * c * field * v
    if off_scale:
        out += (4.0 * off_scale) * s * H.coupling_matvec(s * v)
    if shift:
        out += shift * v
    return out


def metric_matvec(H, theta, lambda0, v) -> np.ndarray:
    """G v with G = 2 (J^T H J - λ0 I) = Y0 + Y1/2 + 2 (L - λ0) I."""
    H = _ising(H)
    L = objective(H, theta)
    return hessian_matvec(H, theta, v, off_scale=0.5, shift=2.0 * (L - lambda0))


def metric_explicit(H, theta, literal=True) -> np.ndarray:
    """Dense G~ = J^T H J from per-entry formulas.

    Off-diagonal entries are q_kl sin 2θ_k sin 2θ_l. Diagonal entries
    evaluate the energy with angle factors C_kj; ``literal=True`` uses
    C_kk = cos(π - θ_k), C_kj = cos θ_j exactly as the formula is usually
    quoted, ``literal=False`` uses the doubled angles cos(π - 2θ_k),
    cos 2θ_j that make the diagonal equal <∂_kφ|H|∂_kφ>.
    """
    H = _ising(H)
    theta = _theta(H, theta)
    n = H.n
    if n > MAX_DENSE:
        raise DeskLimitExceeded(n, MAX_DENSE)
    ang = theta if literal else 2.0 * theta
    G = np.zeros((n, n))
    s = np.sin(2.0 * theta)
    G[H.qi, H.qj] = H.qv * s[H.qi] * s[H.qj]
    G[H.qj, H.qi] = G[H.qi, H.qj]
    base = np.cos(ang)
    for k in range(n):
        C = base.copy()
        C[k] = np.cos(np.pi - ang[k])
        G[k, k] = H.h @ C + H.qv @ (C[H.qi] * C[H.qj])
    return G


@dataclass(frozen=True, eq=False)
class RoundedSolution:
    x: np.ndarray
    objective: float


def round_theta(theta, problem=None, tol=ROUND_TOL) -> RoundedSolution:
    """x_k = (1 - cos 2θ_k) / 2 thresholded at 1/2.

    Raises :class:`UnresolvedParameter` for coordinates with |cos 2θ_k| <= tol.
    ``objective`` is the problem's value at x when a problem is given.
    """
    c = np.cos(2.0 * np.asarray(theta, dtype=float))
    bad = np.flatnonzero(np.abs(c) <= tol)
    if bad.size:
        raise UnresolvedParameter(bad)
    x = (c < 0).astype(np.uint8)
    value = float(problem.evaluate(x)) if problem is not None else float("nan")
    return RoundedSolution(x, value)


def resolve_rounding(theta, problem, tol=ROUND_TOL) -> RoundedSolution:
    """Round θ, settling tied coordinates greedily by the problem objective.

    Tied coordinates are visited in index order and each is set to the value
    that gives the lower objective with the others fixed (ties at 0 before
    any greedy pass is made).
    """
    c = np.cos(2.0 * np.asarray(theta, dtype=float))
    x = (c < 0).astype(np.uint8)
    for k in np.flatnonzero(np.abs(c) <= tol):
        x[k] = 0
        v0 = problem.evaluate(x)
        x[k] = 1
        if problem.evaluate(x) >= v0:
            x[k] = 0
    return RoundedSolution(x, float(problem.evaluate(x)))


def energy_variance(H, theta) -> float:
    """<H^2> - <H>^2 in the product state, O(kappa).

    Writing s_i = c_i + u_i with independent centred u_i of variance
    1 - c_i^2 splits H into orthogonal pieces, so
    Var = sum_i F_i^2 (1 - c_i^2) + sum_{i<j} q_ij^2 (1 - c_i^2)(1 - c_j^2).
    """
    H = _ising(H)
    theta = _theta(H, theta)
    c = np.cos(2.0 * theta)
    v = 1.0 - c * c
    F = H.h + H.coupling_matvec(c)
    return float(F * F @ v + (H.qv * H.qv) @ (v[H.qi] * v[H.qj]))
