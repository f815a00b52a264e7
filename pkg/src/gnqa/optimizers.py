"""Classical optimizers over the product-state angles.

All three baselines use only the O(kappa) closed forms from
:mod:`gnqa.ansatz`: plain gradient descent, a damped (Levenberg-Marquardt
style) Newton method and a natural gradient whose metric is the Hessian
of <phi|H - E0|phi> restricted to the tangent space. Linear systems are
solved matrix-free with preconditioned MINRES.
"""

from __future__ import annotations

import math
import time
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres

from . import ansatz
from .errors import DimensionMismatch, KrylovBreakdown, SingularJacobian
from .model import QuboProblem, to_ising

METHODS = ("gd", "newton", "natgrad")
_DEFAULT_ETA = {"gd": 0.1, "newton": 1.0, "natgrad": 1.0}


@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by the classical solvers.

    ``eta=None`` picks the method default (0.1 for gradient descent, 1
    otherwise). ``e0`` is the ground-energy estimate needed by the natural
    gradient. ``krylov_max_it=None`` means 4 n.
    """

    method: str = "gd"
    eta: float | None = None
    nu: float = 1.0
    max_iters: int = 200
    grad_tol: float = 1e-8
    obj_tol: float = 1e-14
    e0: float | None = None
    seed: int = 0
    krylov_tol: float = 1e-10
    krylov_max_it: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    @property
    def step(self) -> float:
        return _DEFAULT_ETA[self.method] if self.eta is None else self.eta


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)
    status: str = "MaxIters"
    breakdowns: list = field(default_factory=list)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r["objective"] for r in self.records])

    @property
    def iterations(self) -> int:
        return len(self.records) - 1


def krylov_solve(apply, b, precond_diag=None, tol=1e-10, max_it=None):
    """Solve A x = b for symmetric A given as a matvec, by MINRES.

    ``precond_diag`` approximates the diagonal of A; its absolute values
    (entries below 1e-12 replaced by 1) form the SPD preconditioner that
    MINRES requires. Returns the final iterate, which is the best one found
    when ``max_it`` is reached. Raises :class:`KrylovBreakdown` when MINRES
    reports a breakdown.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if not np.any(b):
        return np.zeros(n)
    max_it = 4 * n if max_it is None else max_it
    A = LinearOperator((n, n), matvec=lambda v: apply(np.ravel(v)), dtype=float)
    M = None
    if precond_diag is not None:
        p = np.abs(np.asarray(precond_diag, dtype=float))
        if p.shape != b.shape:
            raise DimensionMismatch("preconditioner and right-hand side differ in size")
        p[p < 1e-12] = 1.0
        inv = 1.0 / p
        M = LinearOperator((n, n), matvec=lambda v: inv * np.ravel(v), dtype=float)
    calls = []

    def count(_):
        calls.append(1)

    try:
        x, info = minres(A, b, rtol=tol, maxiter=max_it, M=M, callback=count)
    except (ValueError, ArithmeticError) as exc:
        raise KrylovBreakdown(str(exc), len(calls)) from exc
    if info < 0 or not np.all(np.isfinite(x)):
        raise KrylovBreakdown(f"MINRES failed (info={info})", len(calls))
    return x


def _prepare(H, theta0):
    if isinstance(H, QuboProblem):
        H = to_ising(H)
    theta = (np.full(H.n, math.pi / 4) if theta0 is None
             else np.array(theta0, dtype=float))
    if theta.shape != (H.n,):
        raise DimensionMismatch(f"theta0 has shape {theta.shape}, expected ({H.n},)")
    return H, theta


def _stationary_status(H, theta, lambda0):
    """Converged at an optimal vertex, otherwise Stalled."""
    try:
        x = ansatz.round_theta(theta).x
    except Exception:
        return "Stalled"
    if lambda0 is None:
        return "Converged"
    L = ansatz.objective(H, np.where(x == 1, math.pi / 2, 0.0))
    return "Converged" if L <= lambda0 + 1e-9 * max(1.0, abs(lambda0)) else "Stalled"


def _run(H, theta, cfg, direction, lambda0, stop_rule, flat_stop=True):
    trace = SolverTrace()
    eta = cfg.step
    start = time.perf_counter()
    L = ansatz.objective(H, theta)
    for it in range(cfg.max_iters + 1):
        g = ansatz.gradient(H, theta)
        gnorm = float(np.linalg.norm(g))
        rec = {"iter": it, "objective": L, "grad_norm": gnorm, "step_norm": None,
               "eta": eta, "time": time.perf_counter() - start}
        trace.records.append(rec)
        verdict = stop_rule(theta, g, gnorm, trace)
        if verdict:
            trace.status = verdict if verdict != "stationary" else \
                _stationary_status(H, theta, lambda0)
            break
        if it == cfg.max_iters:
            break
        try:
            d = direction(theta, g, gnorm)
        except KrylovBreakdown as exc:
            trace.breakdowns.append((it, exc.iterations, str(exc)))
            d = g / (cfg.nu * gnorm)
        if "jitter" in rec:
            step = d
        else:
            step = eta * d
        theta = theta - step
        rec["step_norm"] = float(np.linalg.norm(step))
        L_new = ansatz.objective(H, theta)
        if flat_stop and it > 0 and abs(L_new - L) <= cfg.obj_tol * max(1.0, abs(L)):
            L = L_new
            trace.records.append({"iter": it + 1, "objective": L,
                                  "grad_norm": float(np.linalg.norm(ansatz.gradient(H, theta))),
                                  "step_norm": None, "eta": eta,
                                  "time": time.perf_counter() - start})
            trace.status = _stationary_status(H, theta, lambda0)
            break
        L = L_new
    return theta, trace


def _gradient_stop(cfg):
    def rule(theta, g, gnorm, trace):
        return "stationary" if gnorm < cfg.grad_tol else None
    return rule


def gradient_descent(H, theta0=None, cfg: SolverConfig | None = None, *, lambda0=None):
    """θ <- θ - eta ∇L until ||∇L|| < grad_tol or max_iters.

    ``lambda0`` (the exact ground energy, when known) lets the trace tell a
    verified optimum (Converged) from any other stationary point (Stalled).
    """
    cfg = cfg or SolverConfig("gd")
    H, theta = _prepare(H, theta0)
    return _run(H, theta, cfg, lambda theta, g, gnorm: g, lambda0, _gradient_stop(cfg))


def modified_newton(H, theta0=None, cfg: SolverConfig | None = None, *, lambda0=None):
    """Damped Newton: solve (Y + nu ||∇L|| I) d = ∇L, then θ <- θ - eta d.

    If MINRES breaks down the iteration takes the pure damping step
    ∇L / (nu ||∇L||) instead and records the event in the trace.
    """
    cfg = cfg or SolverConfig("newton")
    H, theta = _prepare(H, theta0)

    def direction(theta, g, gnorm):
        shift = cfg.nu * gnorm
        field_ = ansatz.local_field(H, theta)
        diag = ansatz.hessian_diagonal(H, theta) + shift
        return krylov_solve(
            lambda v: ansatz.hessian_matvec(H, theta, v, shift=shift, field=field_),
            g, diag, cfg.krylov_tol, cfg.krylov_max_it)

    return _run(H, theta, cfg, direction, lambda0, _gradient_stop(cfg))


def natural_gradient(H, theta0=None, cfg: SolverConfig | None = None, *, lambda0=None,
                     jitter: float = 1e-3):
    """θ <- θ - eta G^{-1} ∇L with G = Y0 + Y1/2 + 2 (L - E0) I.

    G is twice the tangent-space Hessian of <phi|H - E0|phi>, so with eta = 1
    this is the Gauss-Newton step for the eigenvalue problem. The iteration
    stops once the energy variance of the product state is below
    grad_tol**2: the state is then an eigenvector to that accuracy, and the
    variance bounds ||∇L||**2 / 4 from above. Stationary points that are not
    eigenvectors (saddles, symmetric plateaus) therefore do not stop it;
    there the gradient carries no direction, so θ is displaced by a
    Gaussian jitter of size ``jitter`` drawn from ``cfg.seed`` and the
    record is tagged ``"jitter"``.
    """
    cfg = cfg or SolverConfig("natgrad")
    if cfg.e0 is None:
        raise ValueError("natural gradient needs a ground-energy estimate e0")
    H, theta = _prepare(H, theta0)
    e0 = float(cfg.e0)
    rng = np.random.default_rng(cfg.seed)
    trace_ref = []

    def direction(theta, g, gnorm):
        if gnorm < cfg.grad_tol:
            trace_ref[0].records[-1]["jitter"] = True
            return jitter * rng.standard_normal(theta.size)
        L = ansatz.objective(H, theta)
        shift = 2.0 * (L - e0)
        field_ = ansatz.local_field(H, theta)
        diag = ansatz.hessian_diagonal(H, theta) + shift
        return krylov_solve(
            lambda v: ansatz.hessian_matvec(H, theta, v, off_scale=0.5, shift=shift,
                                            field=field_),
            g, diag, cfg.krylov_tol, cfg.krylov_max_it)

    def rule(theta, g, gnorm, trace):
        if not trace_ref:
            trace_ref.append(trace)
        var = ansatz.energy_variance(H, theta)
        trace.records[-1]["variance"] = var
        return "stationary" if var <= cfg.grad_tol ** 2 else None

    return _run(H, theta, cfg, direction, lambda0, rule, flat_stop=False)


SOLVERS = {"gd": gradient_descent, "newton": modified_newton, "natgrad": natural_gradient}


def solve(H, cfg: SolverConfig, theta0=None, *, lambda0=None):
    return SOLVERS[cfg.method](H, theta0, cfg, lambda0=lambda0)


GeodesicCheck = namedtuple("GeodesicCheck", "deviation euler_step newton_step newton_gap")


def _jsolve(J, rhs):
    J = np.atleast_2d(np.asarray(J, dtype=float))
    try:
        if np.linalg.cond(J) > 1.0 / np.finfo(float).eps:
            raise SingularJacobian("Jacobian is numerically singular")
        return np.linalg.solve(J, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian(str(exc)) from exc


def geodesic_flow_check(F, J, w0, steps: int = 10_000) -> GeodesicCheck:
    """Integrate J(w) dw/dt = -F(w0) over t in [0, 1] with classical RK4.

    Along the exact flow F(w(t)) = (1 - t) F(w0), so the returned
    ``deviation`` is max_t ||F(w(t)) - (1 - t) F(w0)|| over the grid. With
    rho(t) = exp(-t) the flow becomes J dw/dt = chi F with chi = -1; one
    explicit Euler step of size 1 of that equation is compared with the
    Newton update w0 - J(w0)^{-1} F(w0) (``newton_gap``).
    """
    w = np.atleast_1d(np.asarray(w0, dtype=float)).copy()
    F0 = np.atleast_1d(np.asarray(F(w), dtype=float))

    def rhs(v):
        return _jsolve(J(v), -F0)

    dt = 1.0 / steps
    worst = 0.0
    for k in range(steps):
        k1 = rhs(w)
        k2 = rhs(w + 0.5 * dt * k1)
        k3 = rhs(w + 0.5 * dt * k2)
        k4 = rhs(w + dt * k3)
        w = w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (k + 1) * dt
        dev = float(np.linalg.norm(np.atleast_1d(F(w)) - (1.0 - t) * F0))
        worst = max(worst, dev)

    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    chi, delta_t = -1.0, 1.0
    euler = w0 + delta_t * _jsolve(J(w0), chi * F0)
    newton = w0 - _jsolve(J(w0), F0)
    return GeodesicCheck(worst, euler, newton, float(np.max(np.abs(euler - newton))))
