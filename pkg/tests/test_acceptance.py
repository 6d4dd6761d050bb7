"""Acceptance gate: one test per criterion, each recorded for the run summary."""
from __future__ import annotations

import math
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE
from slowdecay import pulses
from slowdecay.calculus import partial, wave_residual
from slowdecay.core import PulseParams, RaySpec
from slowdecay.diagnostics import coefficient_C, limit_probe, peak_geometry
from slowdecay.em_acoustics import (
    HertzConfig,
    PolarizationWarning,
    em_asymptotics,
    em_solid_angle,
    fluid_residuals,
    maxwell_residual,
    swap_xy,
)
from slowdecay.energy import bound_B_nu, norm_spatial, norm_spectral

EPS = np.finfo(float).eps
SPLASH = PulseParams(t_s=2.0)
UNI = PulseParams(t_s=0.3, z_s=0.1)
FRAC = PulseParams(a1=1.0, a2=2.0, nu=-0.25)


def _record(n: int, checks: dict[str, bool], detail: str, elapsed: float | None = None, budget: float | None = None):
    if budget is not None:
        checks[f"runtime<{budget:g}s"] = elapsed < budget
    failed = [k for k, ok in checks.items() if not ok]
    passed = not failed
    timing = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    msg = detail + timing + ("" if passed else f"; failed: {', '.join(failed)}")
    ACCEPTANCE[n] = (passed, msg)
    print(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {msg}")
    assert passed, msg


def _points(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(0.0, 5.0, n), rng.uniform(-5.0, 5.0, n), rng.uniform(-5.0, 5.0, n)])


WAVE_FIELDS = [
    ("psi", SPLASH, {}), ("Psi", SPLASH, {}), ("psi_plus", SPLASH, {}), ("psi_minus", SPLASH, {}),
    ("u", UNI, {}), ("U", UNI, {}),
    ("f", FRAC, {"nu": -0.25}), ("f", FRAC, {"nu": -0.4}), ("f", FRAC, {"nu": 0.0}),
    ("G", PulseParams(), {"k": 0.5}), ("G", PulseParams(), {"k": 1.0}), ("G", PulseParams(), {"k": 2.0}),
]


def _nonsolution(rho, z, ct):
    return 1.0 / (1.0 + rho**2 + z**2 + ct**2) + 0j


def test_criterion_1_wave_equation():
    t0 = time.perf_counter()
    pts = _points(1, 200)
    checks, worst = {}, 0.0
    for name, p, kw in WAVE_FIELDS:
        rep = wave_residual(pulses.field(name, p, **kw), pts, reject_singular=True)
        label = name + "".join(f"({k}={v:g})" for k, v in kw.items())
        checks[label] = rep.max_relative < 1e-5 and rep.points.shape[0] >= 180
        worst = max(worst, rep.max_relative)
    _record(1, checks, f"{len(WAVE_FIELDS)} fields x 200 points, worst residual {worst:.2e} (< 1e-5)",
            time.perf_counter() - t0, 60.0)


def test_criterion_2_limit_table():
    t0 = time.perf_counter()
    checks = {}

    def probe(name, p, kind, delta=0.0, **kw):
        return limit_probe(pulses.field(name, p), RaySpec(kind, delta=delta, **kw))

    def close(r, ref, rel=1e-3):
        return r.classification == "finite" and abs(r.value - ref) <= rel * abs(ref)

    for delta in (0.0, 0.7):
        ref = 1.0 / (2j * SPLASH.cts - 2 * delta)
        for kind in ("forward-z", "backward-z", "radial"):
            checks[f"psi {kind} d={delta}"] = close(probe("psi", SPLASH, kind, delta), ref)
    checks["psi diagonal zero"] = probe("psi", SPLASH, "diagonal").classification == "zero"
    for kind in ("forward-z", "backward-z", "radial"):
        r = probe("Psi", SPLASH, kind)
        checks[f"Psi {kind} log"] = r.classification == "log-divergent" and abs(r.slope + 0.5) < 1e-3

    for delta in (0.0, 0.4):
        checks[f"u forward d={delta}"] = close(probe("u", UNI, "forward-z", delta),
                                               1j / (UNI.cts + UNI.z_s + 1j * delta))
        checks[f"u radial d={delta}"] = close(probe("u", UNI, "radial", delta), 1j / (2 * UNI.cts + 2j * delta))
        checks[f"u backward d={delta}"] = probe("u", UNI, "backward-z", delta).classification == "zero"

    checks["U forward log"] = probe("U", UNI, "forward-z").classification == "log-divergent"
    checks["U radial log"] = probe("U", UNI, "radial").classification == "log-divergent"
    ub = probe("U", UNI, "backward-z", 0.5)
    checks["U backward ln2"] = close(ub, math.log(2.0))

    ff = probe("f", FRAC, "forward-z")
    checks["f forward exponent"] = ff.classification == "power-divergent" and abs(ff.exponent - 0.25) <= 0.02
    checks["f forward phase"] = abs(ff.phase - 3 * math.pi / 8) <= 0.05
    checks["f forward coefficient"] = abs(ff.value - coefficient_C(FRAC.a1, 0.0).value) <= 1e-3 * abs(ff.value)
    checks["f backward"] = close(probe("f", FRAC, "backward-z"), 0.5j / FRAC.a2**0.75)
    checks["f radial"] = close(probe("f", FRAC, "radial"), 1j / (FRAC.a1 + FRAC.a2) ** 0.75)
    checks["f diagonal zero"] = probe("f", FRAC, "diagonal").classification == "zero"
    _record(2, checks, f"{len(checks)} limits; f exponent {ff.exponent:.4f}, phase {ff.phase:.4f}, "
            f"U backward {ub.value.real:.6f}", time.perf_counter() - t0, 120.0)


def test_criterion_3_norms():
    t0 = time.perf_counter()
    spec = norm_spectral(FRAC)
    bound = bound_B_nu(FRAC)
    spatial = {t: norm_spatial(FRAC, t=t) for t in (0.0, 10.0, 100.0)}
    checks = {
        "spectral 29.041 +-0.2%": abs(spec.value / 29.041 - 1) <= 0.002,
        "bound 33.206 +-0.5%": abs(bound.value / 33.206 - 1) <= 0.005,
        "bound >= norm": bound.value >= spec.value,
        "nu=-1/2 divergent": norm_spectral(FRAC, nu=-0.5).divergent and bound_B_nu(FRAC, nu=-0.5).divergent,
    }
    for t, r in spatial.items():
        checks[f"spatial t={t:g}"] = r.converged and abs(r.value / 29.041 - 1) <= 0.005
    vals = [r.value for r in spatial.values()]
    checks["spatial invariant in t"] = (max(vals) - min(vals)) <= 1e-6 * spec.value
    _record(3, checks, f"spectral {spec.value:.4f}, spatial {vals[0]:.4f}, bound {bound.value:.4f}",
            time.perf_counter() - t0, 300.0)


def test_criterion_4_solid_angle():
    t0 = time.perf_counter()
    fn = pulses.field("f", FRAC)
    cts = (10.0, 100.0, 1e3, 1e4)
    omegas = [peak_geometry(fn, ct).omega for ct in cts]
    checks = {f"ct={ct:g}": abs(om / ref - 1) <= 0.25 for ct, om, ref in zip(cts, omegas, (2.0, 0.2, 0.02, 0.002))}
    slope = float(np.polyfit(np.log10(cts), np.log10(omegas), 1)[0])
    checks["log slope"] = abs(slope + 1.0) <= 0.1
    em = em_solid_angle(FRAC, 1e4).omega
    checks["EM at ct=1e4"] = abs(em / 0.0003 - 1) <= 0.5
    table = ", ".join(f"{o:.3g}" for o in omegas)
    _record(4, checks, f"omega [{table}], slope {slope:.3f}, EM {em:.3g}", time.perf_counter() - t0)


def test_criterion_5_maxwell_fluid():
    t0 = time.perf_counter()
    pts = _points(5, 100)
    fn = pulses.field("f", FRAC)
    mx = maxwell_residual(fn, HertzConfig((1, 1, 0)), pts)
    fl = fluid_residuals(fn, pts)
    transverse = em_asymptotics(HertzConfig((1, 1, 0)), FRAC)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PolarizationWarning)
        axial_cfg = HertzConfig((0, 0, 1))
    axial = em_asymptotics(axial_cfg, FRAC)
    checks = {
        "Maxwell < 1e-4": mx.max_relative < 1e-4,
        "continuity/Euler < 1e-4": fl.max_relative < 1e-4,
        "m=(1,1,0) abnormal": any(transverse.abnormal.values()),
        "m=(1,1,0) exponent 0.25+-0.03": abs(transverse.transverse_exponent - 0.25) <= 0.03,
        "m=(0,0,1) normal": not any(axial.abnormal.values()),
    }
    _record(5, checks, f"Maxwell {mx.max_relative:.2e}, fluid {fl.max_relative:.2e}, "
            f"transverse exponent {transverse.transverse_exponent:.4f}", time.perf_counter() - t0)


def test_criterion_6_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    n = 200
    rho, z, ct = rng.uniform(0.05, 6, n), rng.uniform(-6, 6, n), rng.uniform(-6, 6, n)
    checks = {}

    plus, minus = pulses.splash_split(rho, z, ct, SPLASH)
    whole = pulses.splash_psi(rho, z, ct, SPLASH)
    checks["psi+ - psi- = psi (10 ulp)"] = bool(np.all(
        np.abs(plus - minus - whole) <= 10 * EPS * np.maximum(abs(plus), abs(minus))))
    plus, minus = pulses.primitive_split(rho, z, ct, SPLASH)
    whole = pulses.splash_primitive(rho, z, ct, SPLASH)
    checks["Psi+ - Psi- = Psi (10 ulp)"] = bool(np.all(
        np.abs(plus - minus - whole) <= 10 * EPS * np.maximum(abs(plus), abs(minus))))

    plane = PulseParams(t_s=0.7, z_s=0.0)
    U = pulses.unidirectional_primitive_U(rho, 0.0, ct, plane)
    Psi = pulses.splash_primitive(rho, 0.0, ct, plane)
    checks["U = -Psi in z=0 (10 ulp)"] = bool(np.all(np.abs(U + Psi) <= 10 * EPS * np.abs(Psi)))

    worst_dt = 0.0
    for prim, base, p in (("Psi", "psi", SPLASH), ("U", "u", UNI)):
        d = partial(pulses.field(prim, p), (rho, z, ct), "ct") * p.c
        ref = pulses.field(base, p)(rho, z, ct)
        err = float(np.max(np.abs(d - ref) / np.abs(ref)))
        worst_dt = max(worst_dt, err)
        checks[f"d{prim}/dt = {base} (1e-6)"] = err < 1e-6

    ok = True
    for a1, d in zip(rng.uniform(0.1, 5, n), rng.uniform(-5, 5, n)):
        c = coefficient_C(a1, d)
        ok &= abs(c.value.real - c.re_formula) <= 10 * EPS * abs(c.value)
        ok &= abs(c.value.imag - c.im_formula) <= 10 * EPS * abs(c.value)
    checks["C components (10 ulp)"] = bool(ok)
    _record(6, checks, f"{n} points per identity, worst time-derivative error {worst_dt:.1e}",
            time.perf_counter() - t0)


def test_criterion_7_spectral_synthesis():
    t0 = time.perf_counter()
    const, spread = pulses.synthesis_constant(FRAC, n_points=20)
    checks = {"spread < 1e-5": spread < 1e-5}
    _record(7, checks, f"constant {const.real:.9f}{const.imag:+.1e}j, spread {spread:.1e} over 20 points",
            time.perf_counter() - t0)


def test_criterion_8_negative_controls():
    t0 = time.perf_counter()
    non = wave_residual(_nonsolution, _points(1, 200))
    bad = maxwell_residual(pulses.field("f", FRAC), HertzConfig((1, 1, 0)), _points(5, 100), corrupt=swap_xy)
    div = bound_B_nu(FRAC, nu=-0.51)
    checks = {
        "non-solution fails wave check": non.max_relative >= 1e-5,
        "corrupted F fails Maxwell check": bad.max_relative >= 1e-4,
        "nu=-0.51 bound diverges": div.divergent,
    }
    _record(8, checks, f"non-solution residual {non.max_relative:.2e}, corrupted F {bad.max_relative:.2e}, "
            f"bound(nu=-0.51) divergent={div.divergent}", time.perf_counter() - t0)
