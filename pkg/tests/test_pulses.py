from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate as sint
from scipy.special import gamma

from slowdecay import pulses
from slowdecay.core import FieldPoint, PulseParams

EPS = np.finfo(float).eps


def _random_points(rng, n=200, rmax=6.0, lo=0.05):
    return rng.uniform(lo, rmax, n), rng.uniform(-rmax, rmax, n), rng.uniform(-rmax, rmax, n)


def test_splash_closed_form(rng):
    p = PulseParams(t_s=0.8, c=1.5)
    rho, z, ct = _random_points(rng)
    R2 = rho**2 + z**2
    expect = 1.0 / ((ct + 1j * p.cts) ** 2 - R2)
    np.testing.assert_allclose(pulses.splash_psi(rho, z, ct, p), expect, rtol=1e-13)
    assert pulses.splash_psi(0.0, 0.0, 0.0, PulseParams(t_s=1)) == pytest.approx(-1.0)


def test_splash_conjugation_symmetry(rng, params):
    rho, z, ct = _random_points(rng)
    np.testing.assert_allclose(pulses.splash_psi(rho, z, -ct, params),
                               np.conj(pulses.splash_psi(rho, z, ct, params)), rtol=1e-14)


def test_field_point_input(params):
    pt = FieldPoint(1.0, 2.0, 3.0)
    assert pulses.splash_psi(pt, params=params) == pulses.splash_psi(1.0, 2.0, 3.0, params)


def test_split_sums_to_whole(rng, params):
    rho, z, ct = _random_points(rng)
    plus, minus = pulses.splash_split(rho, z, ct, params)
    whole = pulses.splash_psi(rho, z, ct, params)
    scale = np.maximum(np.abs(plus), np.abs(minus))
    assert np.all(np.abs(plus - minus - whole) <= 10 * EPS * scale)


def test_primitive_split_sums_to_whole(rng, params):
    rho, z, ct = _random_points(rng)
    plus, minus = pulses.primitive_split(rho, z, ct, params)
    whole = pulses.splash_primitive(rho, z, ct, params)
    scale = np.maximum(np.abs(plus), np.abs(minus))
    assert np.all(np.abs(plus - minus - whole) <= 10 * EPS * scale)


def test_split_undefined_at_origin(params):
    with pytest.raises(pulses.SingularSplitError):
        pulses.splash_split(0.0, 0.0, 1.0, params)
    with pytest.raises(pulses.SingularSplitError):
        pulses.primitive_split(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 1.0, params)


def test_primitive_origin_limit(params):
    w = 2.0 + 1j * params.cts
    assert pulses.splash_primitive(0.0, 0.0, 2.0, params) == pytest.approx(-1.0 / (params.c * w), rel=1e-14)
    # continuous across the series/log switch
    near = pulses.splash_primitive(np.array([1e-5, 1e-3]), 0.0, 2.0, params)
    np.testing.assert_allclose(near, -1.0 / w, rtol=1e-6)


def test_primitive_is_time_antiderivative(params):
    # int_{-inf}^{t} psi dt' evaluated directly at one point
    rho, z, ct = 0.7, 0.4, 0.9
    re = sint.quad(lambda t: pulses.splash_psi(rho, z, t, params).real, -np.inf, ct, epsabs=1e-13)[0]
    im = sint.quad(lambda t: pulses.splash_psi(rho, z, t, params).imag, -np.inf, ct, epsabs=1e-13)[0]
    assert pulses.splash_primitive(rho, z, ct, params) == pytest.approx(complex(re, im), abs=1e-10)


def test_expanding_peaks_equal_height():
    # -R Im psi_plus at R = ct is the same for any ct
    p = PulseParams(t_s=2.0)
    heights = []
    for ct in (30.0, 170.0):
        R = np.linspace(ct - 20, ct + 20, 40001)
        plus, _ = pulses.splash_split(R, 0.0, ct, p)
        y = -R * plus.imag
        heights.append(y.max())
        assert abs(R[np.argmax(y)] - ct) < 1e-2
    assert heights[0] == pytest.approx(0.25, rel=1e-8)
    assert heights[1] == pytest.approx(heights[0], rel=1e-8)


def test_converging_tail_small():
    p = PulseParams(t_s=2.0)
    _, minus = pulses.splash_split(30.0, 0.0, 30.0, p)
    tail = -30.0 * minus.imag
    # (1/2) * cts / ((2 ct)**2 + cts**2)
    assert tail == pytest.approx(0.5 * 2.0 / (60.0**2 + 4.0), rel=1e-12)
    assert 0.25 / tail > 500


def test_primitive_expanding_peak_equal_height():
    p = PulseParams(t_s=2.0)
    vals = []
    for ct in (30.0, 160.0):
        plus, minus = pulses.primitive_split(ct, 0.0, ct, p)
        vals.append(ct * plus.real)
        # the whole primitive at R = ct is the plus part minus the minus part
        whole = pulses.splash_primitive(ct, 0.0, ct, p)
        assert ct * whole.real == pytest.approx(ct * (plus - minus).real, rel=1e-12)
    assert vals[0] == pytest.approx(0.5 * math.log(2.0), rel=1e-12)
    assert vals[1] == pytest.approx(vals[0], rel=1e-12)


def test_primitive_log_growth_on_peak():
    p = PulseParams(t_s=2.0)
    ct = np.array([1e3, 1e4, 1e5])
    v = (ct * pulses.splash_primitive(ct, 0.0, ct, p)).real
    slopes = np.diff(v) / np.diff(np.log(ct))
    np.testing.assert_allclose(slopes, -0.5, rtol=1e-3)


def test_unidirectional_closed_form(rng, uni_params):
    rho, z, ct = _random_points(rng)
    p = uni_params
    g = np.sqrt((rho**2 - (ct + 1j * p.cts) ** 2).astype(complex))
    zst = z - 1j * p.z_s
    expect = 1.0 / (g * (1j * zst + g))
    np.testing.assert_allclose(pulses.unidirectional_u(rho, z, ct, p), expect, rtol=1e-12)
    roots = pulses.auxiliary_roots(rho, z, ct, p)
    np.testing.assert_allclose(roots.g, g, rtol=1e-14)
    np.testing.assert_allclose(roots.ct_star, p.cts - 1j * ct, rtol=1e-14)


def test_U_reduces_to_minus_Psi(rng):
    p = PulseParams(t_s=0.7, z_s=0.0)
    rho = rng.uniform(0.05, 6.0, 200)
    ct = rng.uniform(-6.0, 6.0, 200)
    U = pulses.unidirectional_primitive_U(rho, 0.0, ct, p)
    Psi = pulses.splash_primitive(rho, 0.0, ct, p)
    assert np.all(np.abs(U + Psi) <= 10 * EPS * np.abs(Psi))


def test_U_singular_ring_is_nan(uni_params):
    v = pulses.unidirectional_primitive_U(np.array([uni_params.z_s, 0.5]), 0.0, 1.0, uni_params)
    assert np.isnan(v[0]) and np.isfinite(v[1])


def test_fractional_closed_form(rng, params):
    rho, z, ct = _random_points(rng)
    A = params.a1 + 1j * (z - ct)
    B = params.a2 - 1j * (z + ct) + rho**2 / A
    assert np.all(B.real > 0)
    np.testing.assert_allclose(pulses.fractional_f(rho, z, ct, params), A**-1 * B**-0.75, rtol=1e-13)
    # nu = 0 is the first-power pulse
    np.testing.assert_allclose(pulses.fractional_f(rho, z, ct, params, nu=0.0), 1.0 / (A * B), rtol=1e-13)


def test_fractional_time_reversal(rng, params):
    rho, z, ct = _random_points(rng)
    a = pulses.fractional_f(rho, z, ct, params)
    b = pulses.fractional_f(rho, -z, -ct, params)
    np.testing.assert_allclose(b.real, a.real, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(b.imag, -a.imag, rtol=1e-13, atol=1e-15)


def test_fractional_rejects_bad_nu(params):
    with pytest.raises(ValueError):
        pulses.fractional_f(1.0, 0.0, 0.0, params, nu=-1.0)


def test_fwm_values(params):
    assert pulses.fwm_G(0.0, 0.0, 0.0, params, k=2.0) == pytest.approx(1.0 / params.a1)
    with pytest.raises(ValueError):
        pulses.fwm_G(0.0, 0.0, 0.0, params, k=0.0)


@pytest.mark.parametrize("tau", [0.0, 1.5, -4.0])
def test_fwm_gaussian_width(params, tau):
    k = 1.5
    rho = np.linspace(0.0, 5.0, 11)
    z = 3.0
    ct = z - tau
    g = np.abs(pulses.fwm_G(rho, z, ct, params, k=k))
    width2 = (params.a1**2 + tau**2) / (2 * k * params.a1)
    np.testing.assert_allclose(g / g[0], np.exp(-(rho**2) / (2 * width2)), rtol=1e-12)


def test_spectrum_values():
    p = PulseParams(a2=2.0, nu=-0.25)
    assert pulses.spectrum_F(1.0, p) == pytest.approx(math.exp(-2.0) / gamma(0.75), rel=1e-14)
    k = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(pulses.spectrum_F(k, p, nu=0.0), np.exp(-2.0 * k), rtol=1e-14)
    with pytest.raises(ValueError):
        pulses.spectrum_F(0.0, p)


@pytest.mark.parametrize("nu", [-0.25, -0.4, 0.0, 0.6])
def test_spectrum_normalization(nu):
    p = PulseParams(a2=1.7)
    total = sint.quad(lambda k: pulses.spectrum_F(k, p, nu=nu), 0.0, np.inf, epsrel=1e-12)[0]
    assert total == pytest.approx(1.7 ** -(nu + 1), rel=1e-8)


@pytest.mark.parametrize("nu", [-0.25, 0.0])
def test_synthesis_constant_is_one(nu, params):
    const, spread = pulses.synthesis_constant(params, nu=nu)
    assert spread < 1e-5
    assert abs(const - 1.0) < 1e-8


def test_synthesis_error_estimate(params):
    loose = pulses.spectral_synthesize(1.0, 0.5, 2.0, params, epsrel=1e-6)
    tight = pulses.spectral_synthesize(1.0, 0.5, 2.0, params, epsrel=1e-12)
    assert abs(loose.value - tight.value) <= max(loose.error, 1e-13)


def test_field_lookup(params):
    assert pulses.field("f", params, nu=0.0)(1.0, 0.0, 0.0) == pulses.fractional_f(1.0, 0.0, 0.0, params, nu=0.0)
    plus = pulses.field("psi_plus", params)(1.0, 0.5, 0.2)
    assert plus == pulses.splash_split(1.0, 0.5, 0.2, params)[0]
    with pytest.raises(KeyError):
        pulses.field("phi", params)
