"""Spectral transforms f(H) of a diagonal Hamiltonian and the R_f map.

A transform is described by :class:`SpectralTransform` and evaluated
element-wise on the diagonal. The families that need an approximate ground
energy (resolvent, Dirichlet, Chebyshev delta) take it either as an
absolute ``rho`` or as a relative error ``rel`` that is calibrated against
the exact minimum through the free-energy estimate
rho(s) = -(1/s) ln Tr exp(-s H).
"""

from __future__ import annotations

import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ive

from .errors import (CalibrationFailed, RhoNotBelowLambda0, SpectrumOutOfRange,
                     ZeroImage)
from .hilbert import DenseState, DiagonalOperator

FAMILIES = ("power", "exponential", "gibbs", "dirichlet", "chebdelta", "resolvent",
            "indicator")
_NEEDS_RHO = ("dirichlet", "chebdelta", "resolvent")
_DEFAULT_NORM = {"power": "width", "dirichlet": "width", "chebdelta": "width"}
DEFAULT_REL_ERR = 0.1
WIDTH_MULTIPLIER = 5.0


@dataclass(frozen=True)
class SpectralTransform:
    """Immutable description of f.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`. ``indicator`` is the exact projector onto the
        ground level, useful as the ideal limit of the others.
    p : float
        Order (> 0). Dirichlet and Chebyshev-delta orders are truncation
        lengths and are rounded to integers.
    rho : float, optional
        Approximate ground energy in the units of H.
    rel : float, optional
        Relative error used to calibrate ``rho`` when it is not given.
    norm : str, optional
        ``"none"``, ``"frobenius"`` or ``"width"`` (divide by m * sigma).
        Defaults to ``"width"`` for power/Dirichlet/Chebyshev and ``"none"``
        otherwise.
    m : float
        Width multiplier for ``norm="width"``.
    sigma : float, optional
        Fixed standard deviation for width normalization; computed from the
        spectrum when omitted.
    """

    family: str
    p: float = 8.0
    rho: float | None = None
    rel: float | None = None
    norm: str | None = None
    m: float = WIDTH_MULTIPLIER
    sigma: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown transform family {self.family!r}")
        if not self.p > 0:
            raise ValueError("transform order p must be positive")
        if self.norm not in (None, "none", "frobenius", "width"):
            raise ValueError(f"unknown normalization {self.norm!r}")
        if self.rel is not None and not self.rel > 0:
            raise ValueError("relative error must be positive")

    @property
    def normalization(self) -> str:
        return self.norm or _DEFAULT_NORM.get(self.family, "none")

    def __str__(self):
        parts = [self.family, f"{self.p:g}"]
        if self.rho is not None:
            parts.append(f"rho={self.rho!r}")
        elif self.rel is not None:
            parts.append(f"rel={self.rel:g}")
        if self.norm is not None:
            parts.append(f"norm={self.norm}")
        if self.m != WIDTH_MULTIPLIER:
            parts.append(f"m={self.m:g}")
        if self.sigma is not None:
            parts.append(f"sigma={self.sigma!r}")
        return ":".join(parts)


def parse_transform(text: str) -> SpectralTransform:
    """Parse ``family:p[:rho=R|:rel=E][:order=K][:norm=N][:m=M]``.

    ``order`` is an alias for p on the truncated-series families; a bare
    third field is read as the relative error.
    """
    fields = text.strip().split(":")
    family = fields[0].lower()
    kwargs = {}
    if len(fields) > 1 and fields[1]:
        kwargs["p"] = float(fields[1])
    for extra in fields[2:]:
        key, sep, value = extra.partition("=")
        if not sep:
            key, value = "rel", key
        key = key.lower()
        if key == "rho":
            kwargs["rho"] = float(value)
        elif key in ("rel", "rel_err"):
            kwargs["rel"] = float(value)
        elif key == "order":
            kwargs["p"] = float(value)
        elif key == "norm":
            kwargs["norm"] = value
        elif key == "m":
            kwargs["m"] = float(value)
        elif key == "sigma":
            kwargs["sigma"] = float(value)
        else:
            raise ValueError(f"unknown transform option {key!r} in {text!r}")
    return SpectralTransform(family, **kwargs)


def _values(d) -> np.ndarray:
    if isinstance(d, DiagonalOperator):
        return d.d
    return np.asarray(d, dtype=np.float64)


def _rho_from_levels(levels, counts, s):
    # log1p keeps the deficit lambda0 - rho accurate when the excited terms are tiny
    lam0 = levels[0]
    rest = float(np.sum(counts[1:] * np.exp(-s * (levels[1:] - lam0))))
    return float(lam0 - math.log1p(rest + (counts[0] - 1)) / s)


def rho_estimate(d, s: float) -> float:
    """rho(s) = -(1/s) ln Tr exp(-s H), evaluated as a shifted log-sum-exp."""
    if not s > 0:
        raise ValueError("s must be positive")
    levels, counts = np.unique(_values(d), return_counts=True)
    return _rho_from_levels(levels, counts, s)


def rho_calibrate(d, target_rel_err: float, *, s_max: float = 1e12, fallback: bool = True,
                  sigma: float | None = None):
    """Find s with |rho(s) - lambda0| / |lambda0| close to ``target_rel_err``.

    rho(s) is increasing in s and tends to lambda0, so the target is bracketed
    and bisected in log s until the achieved relative error is within 1% of
    the target. Returns ``(rho, s)``.

    When lambda0 = 0 the relative error is undefined; with ``fallback`` the
    result is ``(-0.1 * sigma, nan)`` (sigma from the spectrum unless given),
    otherwise :class:`CalibrationFailed` is raised.
    """
    if not target_rel_err > 0:
        raise ValueError("target relative error must be positive")
    levels, counts = np.unique(_values(d), return_counts=True)
    lam0 = float(levels[0])
    if lam0 == 0.0:
        if not fallback:
            raise CalibrationFailed("lambda0 = 0: relative error is undefined")
        if sigma is None:
            vals = _values(d)
            sigma = float(np.std(vals))
        return (-0.1 * sigma if sigma > 0 else -0.1), float("nan")
    target = lam0 - target_rel_err * abs(lam0)

    def rho(log_s):
        return _rho_from_levels(levels, counts, math.exp(log_s))

    lo = hi = 0.0
    while rho(lo) >= target:
        lo -= 1.0
        if lo < -200:
            raise CalibrationFailed("could not bracket the target from below")
    while rho(hi) < target:
        hi += 1.0
        if hi > math.log(s_max):
            s = s_max
            warnings.warn(f"rho calibration hit the s cap {s_max:g}; "
                          f"relative error {abs(rho(math.log(s)) - lam0) / abs(lam0):.3g}",
                          RuntimeWarning, stacklevel=2)
            return rho(math.log(s)), s
    r = rho(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = rho(mid)
        if abs(abs(r - lam0) / abs(lam0) - target_rel_err) <= 0.01 * target_rel_err:
            return r, math.exp(mid)
        if r < target:
            lo = mid
        else:
            hi = mid
    return r, math.exp(mid)


def rho_via_chebyshev(d, s: float, order: int) -> float:
    """rho(s) from the truncated Chebyshev expansion of exp(-s x).

    With x = d / max|d| and a = s * max|d|,

        Tr exp(-s H) = M e^a [ Ie_0(a) + 2 sum_{k<=order} (-1)^k Ie_k(a) <T_k(x)> ]

    where Ie_k are exponentially scaled modified Bessel functions and <T_k>
    are the uniform-state expectations of the Chebyshev polynomials. Returns
    nan when the truncated trace is not positive.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if not s > 0:
        raise ValueError("s must be positive")
    d = _values(d)
    if not np.all(np.isfinite(d)):
        raise SpectrumOutOfRange("spectrum contains non-finite values")
    scale = float(np.max(np.abs(d)))
    M = d.size
    if scale == 0.0:
        return -math.log(M) / s
    x = d / scale
    a = s * scale
    coef = ive(np.arange(order + 1), a)
    total = coef[0]
    t_prev, t_cur = np.ones_like(x), x
    for k in range(1, order + 1):
        total += 2.0 * (-1) ** k * coef[k] * float(np.mean(t_cur))
        t_prev, t_cur = t_cur, 2.0 * x * t_cur - t_prev
    if not total > 0:
        return float("nan")
    return -(a + math.log(M) + math.log(total)) / s


def resolve(t: SpectralTransform, d) -> SpectralTransform:
    """Return ``t`` with a concrete ``rho`` (and ``sigma`` for width norm)."""
    changes = {}
    if t.family in _NEEDS_RHO and t.rho is None:
        rho, _ = rho_calibrate(d, t.rel if t.rel is not None else DEFAULT_REL_ERR)
        changes["rho"] = rho
    if t.normalization == "width" and t.sigma is None:
        changes["sigma"] = float(np.std(_values(d)))
    return replace(t, **changes) if changes else t


def _scale(t: SpectralTransform, d: np.ndarray) -> float:
    kind = t.normalization
    if kind == "none":
        return 1.0
    if kind == "frobenius":
        value = float(np.linalg.norm(d))
    else:
        sigma = t.sigma if t.sigma is not None else float(np.std(d))
        value = t.m * sigma
    return value if value > 0 else 1.0


def _in_unit_interval(x, what):
    if x.size and not (np.max(np.abs(x)) < 1.0):
        raise SpectrumOutOfRange(f"normalized {what} leaves (-1, 1); "
                                 "increase the width multiplier m")


def apply_f(t: SpectralTransform, d, rtol: float = 1e-9) -> np.ndarray:
    """Evaluate f element-wise on the diagonal.

    Positive rescalings of f do not change R_f, so some families are
    returned in a convenient scale: the resolvent is divided by its value
    at lambda0 and the exponential is shifted so that its maximum is 1.
    """
    d = _values(d)
    t = resolve(t, d)
    fam = t.family
    lam0 = float(d.min())
    if fam == "indicator":
        return (d <= lam0 + rtol * max(1.0, abs(lam0))).astype(np.float64)
    if fam == "resolvent":
        if not t.rho < lam0:
            raise RhoNotBelowLambda0(f"rho={t.rho!r} is not below lambda0={lam0!r}")
        return ((d - t.rho) / (lam0 - t.rho)) ** (-t.p)
    c = _scale(t, d)
    x = d / c
    if fam == "exponential":
        return np.exp(-t.p * (x - x.min()))
    if fam == "gibbs":
        logw = -t.p * x
        logz = np.logaddexp.reduce(logw - logw.max()) + logw.max()
        return np.exp(logw - logz)
    if fam == "power":
        _in_unit_interval(x, "spectrum")
        return (1.0 - x) ** t.p
    rho = t.rho / c
    _in_unit_interval(x, "spectrum")
    _in_unit_interval(np.array([rho]), "rho")
    order = int(round(t.p))
    if fam == "dirichlet":
        n = np.arange(-order, order + 1)
        out = np.zeros(d.size, dtype=np.complex128)
        for k in n:
            out += np.exp(1j * np.pi * k * (x - rho))
        out /= 2.0 * np.pi
        imag = float(np.max(np.abs(out.imag)))
        if imag > 1e-12:
            raise ArithmeticError(f"Dirichlet kernel left an imaginary part {imag:.3g}")
        return out.real.copy()
    # chebdelta: T_k recurrences in x and rho run side by side
    out = np.full(d.size, 0.5)
    t_prev, t_cur = np.ones_like(x), x.copy()
    r_prev, r_cur = 1.0, rho
    for _ in range(order):
        out += r_cur * t_cur
        t_prev, t_cur = t_cur, 2.0 * x * t_cur - t_prev
        r_prev, r_cur = r_cur, 2.0 * rho * r_cur - r_prev
    return (2.0 / np.pi) * out


def rf_map(fvals, state) -> np.ndarray:
    """Normalize f * state; the map R_f with f given by its values."""
    a = state.amp if isinstance(state, DenseState) else np.asarray(state, dtype=np.float64)
    out = fvals * a
    nrm = float(np.sqrt(np.sum(out * out)))
    if not nrm > 0 or not math.isfinite(nrm):
        raise ZeroImage("f(H) annihilates the state")
    out /= nrm
    return out


def apply_Rf(t: SpectralTransform, d, state) -> DenseState:
    return DenseState(rf_map(apply_f(t, d), state))


ResidualReport = namedtuple("ResidualReport", "r bound degeneracy degenerate")


def residual_r(t: SpectralTransform, d, rtol: float = 1e-9) -> ResidualReport:
    """r = sum over excited basis states of (f(lambda_k) / f(lambda_0))**2.

    The ground level (with its multiplicity) is excluded. ``bound`` is
    2 - 2 / sqrt(1 + r), which limits ||R_f(phi) - xi*||**2 whenever the
    ground amplitude of phi is positive and no smaller in magnitude than
    any other amplitude. The bound is only meaningful for a non-degenerate
    ground state; ``degenerate`` flags the other case.
    """
    d = _values(d)
    f = apply_f(t, d)
    lam0 = float(d.min())
    ground = d <= lam0 + rtol * max(1.0, abs(lam0))
    f0 = float(np.max(np.abs(f[ground])))
    ratio = f[~ground] / f0
    r = float(np.sum(ratio * ratio))
    g = int(np.count_nonzero(ground))
    return ResidualReport(r, 2.0 - 2.0 / math.sqrt(1.0 + r), g, g > 1)


SpectrumReport = namedtuple("SpectrumReport", "index raw transformed dominance")


def eigen_distribution_report(t: SpectralTransform | None, d, top: int | None = None):
    """Basis indices sorted by transformed value, largest first.

    ``t=None`` reports the raw spectrum. ``dominance`` is the ratio of the
    largest transformed value to the largest value on a different level
    (1 for a flat spectrum).
    """
    d = _values(d)
    f = d.copy() if t is None else apply_f(t, d)
    order = np.argsort(-f, kind="stable")
    if top is not None:
        order = order[:top]
    fs = f[order]
    lead = f[order[0]] if order.size else 0.0
    others = f[d != d[order[0]]] if order.size else f
    dominance = float(lead / others.max()) if others.size and others.max() != 0 else 1.0
    if others.size == 0:
        dominance = 1.0
    return SpectrumReport(order, d[order], fs, dominance)
