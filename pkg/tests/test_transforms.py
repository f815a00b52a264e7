import math
import warnings

import numpy as np
import pytest

from gnqa.errors import CalibrationFailed, RhoNotBelowLambda0, SpectrumOutOfRange, ZeroImage
from gnqa.hilbert import build_diagonal, build_state
from gnqa.model import to_ising
from gnqa.transforms import (SpectralTransform, apply_f, apply_Rf, eigen_distribution_report,
                             parse_transform, residual_r, resolve, rf_map, rho_calibrate,
                             rho_estimate, rho_via_chebyshev)

from conftest import random_qubo

D4 = np.array([2.0, -2.0, -2.0, 2.0])


def nondegenerate_diagonal(rng, n=6):
    while True:
        d = build_diagonal(to_ising(random_qubo(rng, n, high=9))).d
        levels = np.unique(d)
        if np.count_nonzero(d == levels[0]) == 1 and levels[0] != 0:
            return d


def test_resolvent_dominance_example():
    f = apply_f(SpectralTransform("resolvent", 8, rho=-2.2), D4)
    assert f[1] / f[0] == pytest.approx((4.2 / 0.2) ** 8, rel=1e-12)
    assert f[1] / f[0] == pytest.approx(3.79e10, rel=3e-3)


def test_resolvent_requires_rho_below_ground():
    with pytest.raises(RhoNotBelowLambda0):
        apply_f(SpectralTransform("resolvent", 8, rho=-2.0), D4)


def test_exponential_small_order_is_flat(rng):
    d = rng.standard_normal(16)
    f = apply_f(SpectralTransform("exponential", 1e-12), d)
    assert np.allclose(f, 1.0, atol=1e-10)
    st = build_state(rng.uniform(0, 1.5, 4)).amp
    assert np.allclose(rf_map(f, st), st, atol=1e-10)


def test_power_order_one_is_affine(rng):
    d = rng.standard_normal(32)
    t = SpectralTransform("power", 1)
    f = apply_f(t, d)
    scale = t.m * np.std(d)
    assert np.allclose(f, 1 - d / scale)
    assert np.all(np.diff(f[np.argsort(d)]) < 0)


def test_power_out_of_range():
    with pytest.raises(SpectrumOutOfRange):
        apply_f(SpectralTransform("power", 2, m=0.5), np.array([-3.0, 0.0, 0.0, 3.0]))


@pytest.mark.parametrize("family", ["dirichlet", "chebdelta"])
def test_series_kernels_peak_near_rho(rng, family):
    d = nondegenerate_diagonal(rng)
    t = resolve(SpectralTransform(family, 16, rel=0.1), d)
    f = apply_f(t, d)
    assert np.all(np.isfinite(f))
    assert f[np.argmin(np.abs(d - t.rho))] == pytest.approx(f.max())


def test_gibbs_sums_to_one(rng):
    f = apply_f(SpectralTransform("gibbs", 2.0), rng.standard_normal(64))
    assert f.sum() == pytest.approx(1.0)


def test_rf_fixed_point(rng):
    d = nondegenerate_diagonal(rng)
    ground = np.zeros_like(d)
    ground[np.argmin(d)] = 1.0
    for family in ("resolvent", "exponential", "power", "indicator"):
        out = apply_Rf(SpectralTransform(family, 8, rel=0.1), d, ground).amp
        assert np.allclose(out, ground, atol=1e-15)


def test_rf_high_order_reaches_ground(rng):
    d = nondegenerate_diagonal(rng)
    uniform = build_state(np.full(6, math.pi / 4))
    out = apply_Rf(SpectralTransform("resolvent", 64, rel=0.1), d, uniform).amp
    target = np.zeros_like(d)
    target[np.argmin(d)] = 1.0
    assert np.linalg.norm(out - target) <= 1e-6


def test_rf_positive_scale_invariance(rng):
    d = rng.standard_normal(64)
    st = rng.standard_normal(64)
    f = apply_f(SpectralTransform("exponential", 3.0), d)
    assert np.allclose(rf_map(f, st), rf_map(3.7 * f, st), atol=1e-15, rtol=0)


def test_rf_zero_image():
    with pytest.raises(ZeroImage):
        rf_map(np.array([1.0, 0.0]), np.array([0.0, 1.0]))


def test_rho_estimate_example():
    rho = rho_estimate(D4, 1.0)
    assert rho == pytest.approx(-math.log(2 * math.e ** 2 + 2 * math.e ** -2), rel=1e-14)
    assert rho == pytest.approx(-2.711, abs=1e-3)
    assert -2 - math.log(4) < rho < -2
    assert rho_estimate(D4, 1e3) == pytest.approx(-2.0, abs=1e-2)


def test_rho_estimate_constant_spectrum():
    for s in (0.1, 1.0, 7.0):
        assert rho_estimate(np.full(8, 1.5), s) == pytest.approx(1.5 - math.log(8) / s, abs=1e-14)
    with pytest.raises(ValueError):
        rho_estimate(D4, 0.0)


def test_rho_estimate_properties(rng):
    d = rng.standard_normal(128) * 10
    lam0 = d.min()
    ss = np.geomspace(1e-3, 1e3, 40)
    rhos = np.array([rho_estimate(d, s) for s in ss])
    assert np.all(np.diff(rhos) > -1e-12)
    assert np.all(lam0 - np.log(d.size) / ss < rhos) and np.all(rhos <= lam0)
    # overflow-safe for huge s * spread
    assert math.isfinite(rho_estimate(d * 1e6, 1e6))


def test_rho_calibrate_example():
    rho, s = rho_calibrate(D4, 0.1)
    assert abs(abs(rho + 2) / 2 - 0.1) <= 0.01 * 0.1
    assert rho == pytest.approx(-2.2, abs=2e-3)
    assert rho_estimate(D4, s) == pytest.approx(rho)


def test_rho_calibrate_random(rng):
    for _ in range(10):
        d = nondegenerate_diagonal(rng, 5)
        lam0 = d.min()
        for target in (0.3, 0.1, 0.01):
            rho, _ = rho_calibrate(d, target)
            assert rho < lam0
            assert abs(abs(rho - lam0) / abs(lam0) / target - 1) <= 0.1


def test_rho_calibrate_cap_and_zero_ground():
    with pytest.warns(RuntimeWarning):
        rho, s = rho_calibrate(D4, 1e-15, s_max=1e3)
    assert s == 1e3
    d = np.array([0.0, 1.0, 2.0, 3.0])
    with pytest.raises(CalibrationFailed):
        rho_calibrate(d, 0.1, fallback=False)
    rho, s = rho_calibrate(d, 0.1)
    assert rho < 0 and math.isnan(s)


def test_rho_via_chebyshev(rng):
    for n in (2, 6, 10):
        d = build_diagonal(to_ising(random_qubo(rng, n))).d
        for a in (0.1, 1.0, 5.0):
            s = a / np.abs(d).max()
            assert rho_via_chebyshev(d, s, 64) == pytest.approx(rho_estimate(d, s), abs=1e-8)
    d = rng.uniform(-1, 1, 256)
    ref = rho_estimate(d, 5.0)
    err = [abs(rho_via_chebyshev(d, 5.0, k) - ref) for k in (1, 4, 32)]
    assert err[2] < err[1] < err[0]
    for k in (1, 5, 64):
        assert rho_via_chebyshev(np.zeros(16), 2.0, k) == pytest.approx(-math.log(16) / 2.0,
                                                                      abs=1e-15)
    with pytest.raises(SpectrumOutOfRange):
        rho_via_chebyshev(np.array([0.0, np.inf]), 1.0, 4)


def test_residual_indicator_is_zero(rng):
    rep = residual_r(SpectralTransform("indicator"), nondegenerate_diagonal(rng))
    assert rep.r == 0 and rep.bound == 0 and not rep.degenerate


def test_residual_bound_holds_on_uniform_state(rng):
    for _ in range(10):
        d = nondegenerate_diagonal(rng)
        t = resolve(SpectralTransform("resolvent", 8, rel=0.1), d)
        rep = residual_r(t, d)
        uniform = build_state(np.full(6, math.pi / 4))
        ground = np.zeros_like(d)
        ground[np.argmin(d)] = 1.0
        dist = float(np.sum((apply_Rf(t, d, uniform).amp - ground) ** 2))
        assert dist <= rep.bound + 1e-12


def test_residual_decreases_with_order(rng):
    d = nondegenerate_diagonal(rng)
    rho, _ = rho_calibrate(d, 0.1)
    r = [residual_r(SpectralTransform("resolvent", p, rho=rho), d).r for p in (4, 8, 16)]
    assert r[0] > r[1] > r[2]


def test_residual_flags_degeneracy():
    rep = residual_r(SpectralTransform("resolvent", 8, rho=-2.2), D4)
    assert rep.degenerate and rep.degeneracy == 2


def test_eigen_report(rng):
    d = rng.standard_normal(32)
    rep = eigen_distribution_report(None, d)
    assert np.array_equal(rep.raw, np.sort(d)[::-1])
    rep = eigen_distribution_report(SpectralTransform("resolvent", 8, rho=-2.2), D4)
    assert set(rep.index[:2].tolist()) == {1, 2}
    assert rep.dominance == pytest.approx((4.2 / 0.2) ** 8)
    flat = eigen_distribution_report(SpectralTransform("exponential", 2.0), np.ones(8))
    assert np.all(flat.transformed == flat.transformed[0]) and flat.dominance == 1.0
    assert len(eigen_distribution_report(None, d, top=5).index) == 5


def test_parse_transform():
    t = parse_transform("resolvent:8")
    assert t.family == "resolvent" and t.p == 8 and t.rho is None
    assert parse_transform("resolvent:8:0.05").rel == 0.05
    assert parse_transform("Resolvent:4:rho=-3.5").rho == -3.5
    t = parse_transform("chebdelta:1:order=32:norm=frobenius:m=3")
    assert (t.p, t.normalization, t.m) == (32, "frobenius", 3.0)
    assert parse_transform(str(t)) == t
    for bad in ("nope:1", "power:-1", "power:2:color=red", "power:2:norm=weird"):
        with pytest.raises(ValueError):
            parse_transform(bad)


def test_resolve_fills_rho_and_sigma(rng):
    d = nondegenerate_diagonal(rng)
    t = resolve(SpectralTransform("resolvent", 8), d)
    assert t.rho < d.min()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        w = resolve(SpectralTransform("power", 2), d)
    assert w.sigma == pytest.approx(np.std(d))
