from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate as sint
from scipy.special import exp1, gamma

from slowdecay import pulses
from slowdecay.core import PulseParams
from slowdecay.energy import (
    SpectralBound,
    bound_B_nu,
    endpoint_exponent,
    exp_integral_E1,
    key_integral_check,
    norm_spatial,
    norm_spectral,
    spatial_integral,
    spectral_bound,
    total_energy_scalar,
)

FRAC = PulseParams(a1=1.0, a2=2.0, nu=-0.25)


# -------------------------------------------------- exponential integral


def test_e1_against_scipy():
    x = np.concatenate([np.geomspace(1e-8, 1.0, 40), np.linspace(1.0, 700.0, 60)])
    np.testing.assert_allclose(exp_integral_E1(x), exp1(x), rtol=1e-12)
    assert exp_integral_E1(1.0) == pytest.approx(0.219383934395520, rel=1e-12)


def test_e1_scaled_large_argument():
    x = np.array([1e3, 1e6, 1e12])
    v = exp_integral_E1(x, scaled=True)
    assert np.all(np.isfinite(v))
    np.testing.assert_allclose(x * v, 1.0, atol=2e-3)
    assert abs(1e12 * v[-1] - 1.0) < 1e-11


@pytest.mark.parametrize("x", [0.01, 0.1, 1.0, 10.0, 100.0])
def test_e1_log_bound(x):
    assert exp_integral_E1(x, scaled=True) < math.log1p(1.0 / x)


def test_e1_domain():
    with pytest.raises(ValueError):
        exp_integral_E1(0.0)
    with pytest.raises(ValueError):
        exp_integral_E1(np.array([1.0, -2.0]))


# -------------------------------------------------------------- norms


def test_norm_values():
    spec = norm_spectral(FRAC)
    assert spec.converged
    assert spec.value == pytest.approx(29.041, rel=0.002)
    b = bound_B_nu(FRAC)
    assert b.value == pytest.approx(33.206, rel=0.005)
    assert spec.value <= b.value


def test_spectral_norm_independent_oracle():
    # direct quadrature of the spectral weight with scipy's E1
    nu = -0.25
    g = lambda k: math.exp(2 * k) * exp1(2 * k) * k ** (2 * nu) * math.exp(-4 * k) if k < 300 else 0.0
    v = sum(sint.quad(g, a, b, epsabs=0, epsrel=1e-12, limit=400)[0]
            for a, b in ((0, 1e-6), (1e-6, 1), (1, 40), (40, 300)))
    ref = 2 * math.pi * math.pi / gamma(nu + 1) ** 2 * v
    assert norm_spectral(FRAC).value == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("t", [0.0, 10.0, 100.0])
def test_spatial_norm_time_invariant(t):
    res = norm_spatial(FRAC, t=t)
    assert res.converged
    assert res.value == pytest.approx(29.041, rel=0.005)
    assert res.value == pytest.approx(norm_spectral(FRAC).value, rel=1e-8)


@pytest.mark.parametrize("nu", [-0.4, -0.25, 0.0, 0.5])
def test_spatial_equals_spectral(nu):
    a = norm_spatial(FRAC, nu=nu)
    b = norm_spectral(FRAC, nu=nu)
    assert a.converged and b.converged
    assert abs(a.value - b.value) <= a.error + b.error + 1e-9 * b.value


def test_norm_close_to_divergence_is_finite():
    r = norm_spectral(FRAC, nu=-0.49)
    assert r.converged and not r.divergent and math.isfinite(r.value)
    assert r.value <= bound_B_nu(FRAC, nu=-0.49).value


@pytest.mark.parametrize("nu", [-0.5, -0.51, -0.7])
def test_divergence_flagged(nu):
    assert norm_spectral(FRAC, nu=nu).divergent
    assert bound_B_nu(FRAC, nu=nu).divergent


def test_spatial_divergence_flagged():
    r = norm_spatial(FRAC, nu=-0.51)
    assert r.divergent and not r.converged


def test_endpoint_exponent():
    assert endpoint_exponent(lambda k: k**-0.5) == pytest.approx(-0.5, abs=1e-12)
    assert endpoint_exponent(lambda k: k**-1.02) <= -1.0


def test_spectral_bound_record():
    sb = spectral_bound(FRAC, spatial=False)
    assert isinstance(sb, SpectralBound)
    assert sb.bound_holds and math.isnan(sb.parseval_gap)


def test_spatial_integral_gaussian():
    res = spatial_integral(lambda rho, z: np.exp(-(rho**2 + z**2)), 2.0, decay=40.0)
    assert res.converged
    assert res.value == pytest.approx(math.pi**1.5, rel=1e-8)
    with pytest.raises(ValueError):
        spatial_integral(lambda rho, z: rho, 1.0, 3.0, tail="none")


def test_spatial_integral_power_tail():
    # (1 + R**2)**-2 over space is pi**2
    dens = lambda rho, z: (1.0 + rho**2 + z**2) ** -2
    assert spatial_integral(dens, 4.0, decay=2.0).value == pytest.approx(math.pi**2, rel=1e-7)
    geo = spatial_integral(dens, 4.0, decay=2.0, tail="geometric", max_doublings=60)
    assert geo.converged and geo.value == pytest.approx(math.pi**2, rel=1e-6)


# ------------------------------------------------------------ key integral


@pytest.mark.parametrize("lam,dk", [(0.5, 1.0), (2.0, 0.7), (1.0, -1.3)])
def test_key_integral(lam, dk):
    k = key_integral_check(lam, dk)
    assert k.i1 == pytest.approx(-k.i2, abs=1e-9)
    assert k.i1 == pytest.approx(k.expected, rel=1e-8)
    assert abs(k.total) < 1e-9
    # truncated half lines keep a 1/(truncation) remainder
    assert abs(k.total_trunc) < 10.0 / (dk * dk * k.truncation)
    assert k.half_difference == pytest.approx(k.expected, rel=1e-8)


def test_key_integral_sign_follows_dk():
    a = key_integral_check(1.0, 0.8)
    b = key_integral_check(1.0, -0.8)
    assert a.i1 == pytest.approx(-b.i1, rel=1e-9)


def test_key_integral_domain():
    with pytest.raises(ValueError):
        key_integral_check(0.0, 1.0)
    with pytest.raises(ValueError):
        key_integral_check(1.0, 0.0)


# ------------------------------------------------------------ total energy


def test_total_energy_conserved():
    e0 = total_energy_scalar(FRAC, t=0.0)
    e1 = total_energy_scalar(FRAC, t=10.0)
    assert e0.converged and e1.converged
    assert e0.value == pytest.approx(3.6404671, rel=1e-6)
    assert abs(e0.value - e1.value) <= e0.error + e1.error


def test_total_energy_finite_near_critical_power():
    res = total_energy_scalar(FRAC, nu=-0.4)
    assert res.converged and not res.divergent
    assert res.value == pytest.approx(total_energy_scalar(FRAC, nu=-0.4, t=10.0).value, rel=1e-6)


def test_total_energy_divergent_at_half():
    assert total_energy_scalar(FRAC, nu=-0.5).divergent


def test_primitive_energy():
    p = PulseParams(t_s=1.0)
    res = total_energy_scalar(p, field=pulses.field("Psi", p), decay=2.0)
    assert res.converged
    assert res.value == pytest.approx(math.pi**2, abs=5 * res.error)
