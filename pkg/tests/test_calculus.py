from __future__ import annotations

import numpy as np
import pytest

from slowdecay import pulses
from slowdecay.calculus import (
    StencilConfig,
    StencilError,
    SamplingError,
    cartesian_derivative,
    gradient,
    partial,
    partial_estimate,
    stencil_weights,
    wave_residual,
)
from slowdecay.core import FieldPoint, PulseParams


def test_stencil_weights():
    off, w = stencil_weights(1, 4)
    np.testing.assert_allclose(off, [-2, -1, 1, 2])
    np.testing.assert_allclose(w, [1 / 12, -2 / 3, 2 / 3, -1 / 12])
    off, w = stencil_weights(2, 6)
    assert abs(w.sum()) < 1e-14 and len(off) == 7


def test_config_validation():
    with pytest.raises(ValueError):
        StencilConfig(order=5)
    with pytest.raises(ValueError):
        StencilConfig(base_step=0.0)
    cfg = StencilConfig(base_step=0.01)
    h = cfg.step(np.array([0.5, 100.0]))
    assert np.all(np.log2(h) == np.round(np.log2(h)))
    assert h[0] == h[1]
    assert StencilConfig(base_step=0.01, relative=True).step(100.0) == pytest.approx(1.0, rel=0.5)


def test_polynomial_exactness():
    field = lambda rho, z, ct: rho**2 + 0j * z
    assert partial(field, FieldPoint(3.0, 0.0, 0.0), "rho") == pytest.approx(6.0, abs=1e-10)


def test_second_derivative_of_plane_wave():
    k = 2.0
    field = lambda rho, z, ct: np.exp(1j * k * z) + 0 * rho
    d2 = partial(field, FieldPoint(0.5, 0.3, 0.0), "z", 2)
    assert abs(d2 / np.exp(1j * k * 0.3) + k**2) < 1e-8


def test_mixed_derivative():
    field = lambda rho, z, ct: np.sin(z) * np.cos(ct) + 0 * rho
    v = partial(field, FieldPoint(1.0, 0.4, 0.7), {"z": 1, "ct": 1})
    assert v == pytest.approx(-np.cos(0.4) * np.sin(0.7), abs=1e-9)


def test_gradient_cartesian():
    field = lambda rho, z, ct: rho**2 + z**2 + 0j
    g = gradient(field, (1.0, 0.0, 2.0, 0.0))
    np.testing.assert_allclose(g.real, [2.0, 0.0, 4.0], atol=1e-9)


def test_gradient_matches_partials(params):
    fn = pulses.field("f", params)
    pt = FieldPoint(0.8, 0.3, 1.2)
    g = gradient(fn, pt)
    assert g[0] == pytest.approx(partial(fn, pt, "rho"), rel=1e-9)
    assert g[2] == pytest.approx(partial(fn, pt, "z"), rel=1e-9)
    assert abs(g[1]) < 1e-9


def test_psi_gradient_finite_everywhere(params, rng):
    fn = pulses.field("psi", params)
    pts = np.column_stack([rng.uniform(-5, 5, (50, 3)), rng.uniform(-5, 5, 50)])
    g = gradient(fn, pts)
    assert np.all(np.isfinite(g))


def test_cartesian_derivative_vector_output():
    fn = lambda x, y, z, ct: np.stack([x * y, z * ct], axis=-1)
    d = cartesian_derivative(fn, (2.0, 3.0, 0.5, 1.0), {"x": 1})
    np.testing.assert_allclose(d, [3.0, 0.0], atol=1e-9)


@pytest.mark.parametrize("order", [4, 6])
def test_convergence_order(order):
    field = lambda rho, z, ct: np.exp(1j * 1.3 * z) + 0 * rho
    pt = FieldPoint(0.0, 0.2, 0.0)
    exact = 1j * 1.3 * np.exp(1j * 1.3 * 0.2)
    e1 = abs(partial(field, pt, "z", cfg=StencilConfig(order=order, base_step=2**-3)) - exact)
    e2 = abs(partial(field, pt, "z", cfg=StencilConfig(order=order, base_step=2**-4)) - exact)
    assert e1 / e2 >= 2 ** (order - 0.5)


def test_richardson_error_estimate():
    field = lambda rho, z, ct: np.exp(1j * z) + 0 * rho
    cfg = StencilConfig(order=4, base_step=2**-4, richardson=True)
    val, err = partial_estimate(field, FieldPoint(0.0, 0.5, 0.0), "z", cfg=cfg)
    assert err is not None and abs(val - 1j * np.exp(0.5j)) <= 10 * err + 1e-14


def test_stencil_error_on_singular_sample(uni_params):
    fn = pulses.field("U", uni_params)
    # a first-derivative stencil skips its centre; the second one samples it
    with pytest.raises(StencilError):
        partial(fn, FieldPoint(uni_params.z_s, 0.0, 1.0), "z", 2)


@pytest.mark.parametrize("name", ["psi", "Psi", "u", "U", "f", "G"])
def test_pulse_residuals(name, rng):
    params = PulseParams(t_s=0.3, z_s=0.1) if name in ("u", "U") else PulseParams()
    pts = np.column_stack([rng.uniform(0.0, 5.0, 200), rng.uniform(-5.0, 5.0, 200), rng.uniform(-5.0, 5.0, 200)])
    rep = wave_residual(pulses.field(name, params), pts, reject_singular=True)
    assert rep.max_relative < 1e-5


def test_plane_wave_residual():
    fn = lambda rho, z, ct: np.exp(2j * (z - ct)) + 0 * rho
    pts = np.array([[0.0, 0.1, 0.2], [1.0, -2.0, 3.0]])
    assert wave_residual(fn, pts).max_relative < 1e-8


def test_non_solution_fails():
    fn = lambda rho, z, ct: 1.0 / (ct**2 + rho**2 + z**2 + 1.0) + 0j
    pts = np.array([[0.5, 0.1, 0.2], [1.0, -2.0, 3.0], [0.0, 1.0, 1.0]])
    rep = wave_residual(fn, pts)
    assert not rep.passed() and rep.max_relative > 0.1


def test_too_many_singular_points(uni_params):
    pts = np.array([[uni_params.z_s, 0.0, 1.0]] * 5 + [[0.5, 0.5, 0.5]])
    with pytest.raises(SamplingError):
        wave_residual(pulses.field("U", uni_params), pts, reject_singular=True)


def test_time_derivative_of_primitives(rng, params, uni_params):
    pts = np.column_stack([rng.uniform(0.1, 5, 100), rng.uniform(-5, 5, 100), rng.uniform(-5, 5, 100)])
    for prim, base, p in (("Psi", "psi", params), ("U", "u", uni_params)):
        d = partial(pulses.field(prim, p), tuple(pts.T), "ct") * p.c
        ref = pulses.field(base, p)(pts[:, 0], pts[:, 1], pts[:, 2])
        assert np.max(np.abs(d - ref) / np.abs(ref)) < 1e-6
