"""Electromagnetic and acoustic fields derived from scalar pulses.

The electromagnetic field comes from a Hertz potential ``Pi = m f`` with a
constant complex direction ``m``; its Riemann-Silberstein vector is

    F = curl curl Pi + i d/dct curl Pi
      = grad(m . grad f) - m lap f + i d/dct (grad f x m),

which obeys ``curl F = i dF/dct`` and ``div F = 0`` whenever ``f`` solves
the wave equation.  The acoustic field takes ``Re f`` as velocity
potential.  All derivatives are Cartesian finite-difference stencils.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import (
    DEFAULT_STENCIL,
    ResidualReport,
    SamplingError,
    StencilConfig,
    StencilError,
    _diff,
    _reject,
    as_cartesian,
)
from .core import FieldPoint, PulseParams, RaySpec
from .diagnostics import LimitResult, ModelFit, limit_probe, peak_geometry
from . import pulses

COMPONENTS = ("E_x", "E_y", "E_z", "B_x", "B_y", "B_z")
# second-difference rounding is ~eps/h**2 ~ 1e-11 relative; anything below this is symmetry-zero
NEGLIGIBLE = 1e-8
# nested first derivatives are truncation-limited at the default step near sharp
# features (u, psi_plus at cts ~ 0.3); one halving keeps every family below 1e-4
RESIDUAL_STENCIL = StencilConfig(base_step=2.0**-8)

# mixed-derivative orders over (x, y, z, ct)
_SECOND = {
    (0, 0): (2, 0, 0, 0), (1, 1): (0, 2, 0, 0), (2, 2): (0, 0, 2, 0),
    (0, 1): (1, 1, 0, 0), (0, 2): (1, 0, 1, 0), (1, 2): (0, 1, 1, 0),
}
_TIME_GRAD = ((1, 0, 0, 1), (0, 1, 0, 1), (0, 0, 1, 1))


class PolarizationWarning(UserWarning):
    """Direction vector known not to produce slowly decaying fields."""


@dataclass(frozen=True)
class HertzConfig:
    """Hertz potential direction ``m`` and permittivity ``epsilon0``."""

    m: tuple = (1.0, 0.0, 0.0)
    epsilon0: float = 1.0

    def __post_init__(self) -> None:
        m = tuple(complex(v) for v in self.m)
        if len(m) != 3:
            raise ValueError("m must have three components")
        if not any(m):
            raise ValueError("m must be non-zero")
        if not self.epsilon0 > 0:
            raise ValueError("epsilon0 must be positive")
        object.__setattr__(self, "m", m)
        if m[0] == 0 and m[1] == 0:
            warnings.warn("an axial Hertz vector does not give abnormally decaying fields",
                          PolarizationWarning, stacklevel=3)

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.m, dtype=complex)


@dataclass
class EMSample:
    """Riemann-Silberstein vector with the real fields it encodes, shape ``(..., 3)``."""

    F: np.ndarray
    E: np.ndarray
    B: np.ndarray

    @classmethod
    def from_rs(cls, F, epsilon0: float = 1.0, c: float = 1.0) -> "EMSample":
        F = np.asarray(F, dtype=complex)
        s = math.sqrt(2.0 / epsilon0)
        return cls(F, s * F.real, s * F.imag / c)

    def to_rs(self, epsilon0: float = 1.0, c: float = 1.0) -> np.ndarray:
        """Rebuild ``F = sqrt(eps0/2) (E + i c B)``."""
        return math.sqrt(epsilon0 / 2.0) * (self.E + 1j * c * self.B)


@dataclass
class AcousticSample:
    """First-order acoustic observables: velocity ``v`` and excess pressure ``p``."""

    v: np.ndarray
    p: np.ndarray
    rho0: float = 1.0


def _cartesian(field_fn: Callable, cartesian: bool) -> Callable:
    return field_fn if cartesian else as_cartesian(field_fn)


def _points4(points):
    """``(N, 4)`` Cartesian rows from a FieldPoint, ``(rho, z, ct)`` rows or ``(x, y, z, ct)`` rows."""
    if isinstance(points, FieldPoint):
        return np.array([[points.rho, 0.0, points.z, points.ct]])
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[-1] == 3:
        return np.column_stack([p[:, 0], np.zeros(len(p)), p[:, 1], p[:, 2]])
    if p.shape[-1] != 4:
        raise ValueError("points must be (rho, z, ct) or (x, y, z, ct) rows")
    return p


def rs_vector(fn_cart: Callable, x, y, z, ct, m, cfg: StencilConfig = DEFAULT_STENCIL,
              strict: bool = True) -> np.ndarray:
    """Riemann-Silberstein vector of ``Pi = m f`` at coordinate arrays; shape ``(N, 3)``."""
    co = (x, y, z, ct)
    m = np.asarray(m, dtype=complex)
    hess = np.empty((np.size(x), 3, 3), dtype=complex)
    for (i, j), o in _SECOND.items():
        d = np.ravel(_diff(fn_cart, co, o, cfg, strict=strict))
        hess[:, i, j] = d
        hess[:, j, i] = d
    tgrad = np.stack([np.ravel(_diff(fn_cart, co, o, cfg, strict=strict)) for o in _TIME_GRAD], axis=-1)
    lap = np.trace(hess, axis1=1, axis2=2)
    return hess @ m - lap[:, None] * m[None, :] + 1j * np.cross(tgrad, m[None, :])


def hertz_to_rs(field_fn: Callable, cfg: HertzConfig, points, stencil: StencilConfig = DEFAULT_STENCIL,
                c: float = 1.0, cartesian: bool = False) -> EMSample:
    """Electromagnetic field of the Hertz potential ``m f``.

    ``points`` is a :class:`FieldPoint`, ``(rho, z, ct)`` rows (taken at
    ``y = 0``) or ``(x, y, z, ct)`` rows; ``field_fn`` is cylindrical unless
    ``cartesian`` is set.

    Raises
    ------
    StencilError
        If a stencil footprint touches a singularity.
    """
    p = _points4(points)
    fc = _cartesian(field_fn, cartesian)
    F = rs_vector(fc, p[:, 0], p[:, 1], p[:, 2], p[:, 3], cfg.vector, stencil)
    return EMSample.from_rs(F, cfg.epsilon0, c)


def _outer(cfg: StencilConfig) -> StencilConfig:
    from dataclasses import replace
    return replace(cfg, base_step=cfg.base_step * 4.0, richardson=False)


def _curl_residual(Ffun: Callable, p: np.ndarray, cfg: StencilConfig):
    """``|curl F - i dF/dct|``, ``|div F|`` and ``|curl F|`` with an outer stencil over ``Ffun``."""
    co = (p[:, 0], p[:, 1], p[:, 2], p[:, 3])
    outer = _outer(cfg)
    d = [_diff(Ffun, co, o, outer) for o in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))]
    dx, dy, dz, dt = d
    curl = np.stack([dy[:, 2] - dz[:, 1], dz[:, 0] - dx[:, 2], dx[:, 1] - dy[:, 0]], axis=-1)
    div = dx[:, 0] + dy[:, 1] + dz[:, 2]
    res = curl - 1j * dt
    return np.linalg.norm(res, axis=-1), np.abs(div), np.linalg.norm(curl, axis=-1)


def maxwell_residual(field_fn: Callable, cfg: HertzConfig, points, stencil: StencilConfig = RESIDUAL_STENCIL,
                     cartesian: bool = False, corrupt: Callable | None = None,
                     reject_singular: bool = False) -> ResidualReport:
    """Relative residuals of ``curl F = i dF/dct`` and ``div F = 0``.

    Both are normalized by ``|curl F|`` at each point; ``residual`` holds the
    larger of the two and ``extra`` keeps them separately.  ``corrupt``, if
    given, maps the ``(N, 3)`` array ``F`` before differentiation (used for
    negative controls).

    Raises
    ------
    SamplingError
        If ``reject_singular`` drops more than 10% of the points.
    """
    pts = _points4(points)
    fc = _cartesian(field_fn, cartesian)
    m = cfg.vector

    def Ffun(x, y, z, ct):
        F = rs_vector(fc, x, y, z, ct, m, stencil)
        return corrupt(F) if corrupt is not None else F

    (curl_res, div_res, curl_norm), kept, rejected = _reject(
        lambda q: _curl_residual(Ffun, q, stencil), pts, reject_singular)
    res = np.maximum(curl_res, div_res)
    return ResidualReport(kept, res, curl_norm, rejected,
                          {"curl": curl_res / curl_norm, "divergence": div_res / curl_norm})


def swap_xy(F: np.ndarray) -> np.ndarray:
    """Negative control: exchange the x and y components of ``F``."""
    return F[..., [1, 0, 2]]


# --------------------------------------------------------------- asymptotics


def _negligible(ray: RaySpec, y: np.ndarray, ct: np.ndarray) -> LimitResult:
    fit = ModelFit("negligible", {"L": 0j}, 0.0, 1.0, "zero")
    return LimitResult(ray=ray, ct=ct, samples=y, classification="zero", value=0j, error=0.0,
                       exponent=0.0, r2=1.0, fits={"negligible": fit}, alternatives=())


def _probe_components(comp_fn: Callable, names, ray: RaySpec, weight: float = 1.0) -> dict[str, LimitResult]:
    """Probe each column of ``comp_fn(x, z, ct) -> (N, k)`` along ``ray``.

    Columns whose samples stay below ``NEGLIGIBLE`` times the largest column
    vanish by symmetry and are reported as ``zero`` without fitting.
    """
    ct = ray.ct_sequence
    rho, z = ray.coordinates(ct)
    vals = np.asarray(comp_fn(rho, z, ct))
    y = ct[:, None] ** weight * vals
    scale = np.max(np.abs(y))
    out = {}
    for k, name in enumerate(names):
        col = y[:, k]
        if np.max(np.abs(col)) <= NEGLIGIBLE * scale:
            out[name] = _negligible(ray, col, ct)
            continue
        out[name] = limit_probe(lambda r, zz, t, v=vals[:, k]: v, ray, weight=weight, part="re")
    return out


def em_components(field_fn: Callable, cfg: HertzConfig, stencil: StencilConfig = DEFAULT_STENCIL,
                  c: float = 1.0) -> Callable:
    """``fn(x, z, ct) -> (N, 6)`` real ``(E, B)`` in the plane ``y = 0``."""
    fc = as_cartesian(field_fn)

    def comps(x, z, ct):
        x, z, ct = (np.ravel(a).astype(float) for a in np.broadcast_arrays(x, z, ct))
        s = EMSample.from_rs(rs_vector(fc, x, np.zeros_like(x), z, ct, cfg.vector, stencil), cfg.epsilon0, c)
        return np.concatenate([s.E, s.B], axis=-1)
    return comps


@dataclass
class EMAsymptotics:
    """Per-component limit probes of ``ct * (E, B)`` along one ray."""

    ray: RaySpec
    components: dict[str, LimitResult]

    @property
    def abnormal(self) -> dict[str, bool]:
        return {k: v.classification in ("power-divergent", "log-divergent") for k, v in self.components.items()}

    @property
    def transverse_exponent(self) -> float:
        """Largest power-law exponent among the transverse components."""
        exps = [self.components[k].exponent for k in ("E_x", "E_y", "B_x", "B_y")
                if self.components[k].classification == "power-divergent"]
        return max(exps) if exps else 0.0

    @property
    def axial_abnormal(self) -> bool:
        return self.abnormal["E_z"] or self.abnormal["B_z"]


def em_asymptotics(cfg: HertzConfig, params: PulseParams = pulses.DEFAULT, ray: RaySpec | None = None,
                   nu: float | None = None, stencil: StencilConfig = DEFAULT_STENCIL,
                   field_fn: Callable | None = None) -> EMAsymptotics:
    """Classify ``ct * component`` for all six field components along ``ray``.

    The default field is the fractional pulse and the default ray runs
    forward along the axis on the peak.
    """
    ray = RaySpec("forward-z") if ray is None else ray
    fn = pulses.field("f", params, nu=nu) if field_fn is None else field_fn
    comps = em_components(fn, cfg, stencil, params.c)
    return EMAsymptotics(ray, _probe_components(comps, COMPONENTS, ray))


# term-by-term pieces of F: every second derivative that can enter
TERM_ORDERS = {
    "xx": (2, 0, 0, 0), "yy": (0, 2, 0, 0), "zz": (0, 0, 2, 0),
    "xy": (1, 1, 0, 0), "xz": (1, 0, 1, 0), "yz": (0, 1, 1, 0),
    "ct,x": (1, 0, 0, 1), "ct,y": (0, 1, 0, 1), "ct,z": (0, 0, 1, 1),
}


def term_asymptotics(params: PulseParams = pulses.DEFAULT, nu: float | None = None,
                     ray: RaySpec | None = None, stencil: StencilConfig = DEFAULT_STENCIL) -> dict[str, LimitResult]:
    """Limit probes of ``ct * d2f`` for each second derivative entering ``F``.

    The default ray runs forward at ``rho0 = 0.5`` so that derivatives odd
    in ``x`` do not vanish identically.
    """
    ray = RaySpec("forward-z", rho0=0.5) if ray is None else ray
    fc = as_cartesian(pulses.field("f", params, nu=nu))

    def terms(x, z, ct):
        co = (x, np.zeros_like(x), z, ct)
        return np.stack([_diff(fc, co, o, stencil) for o in TERM_ORDERS.values()], axis=-1)
    return _probe_components(terms, tuple(TERM_ORDERS), ray)


def em_solid_angle(params: PulseParams, ct: float, cfg: HertzConfig | None = None, nu: float | None = None,
                   stencil: StencilConfig = DEFAULT_STENCIL, half_width: float | None = None,
                   rho_max: float | None = None):
    """Peak geometry of ``E_x`` on the cut ``y = 0``; see :func:`diagnostics.peak_geometry`."""
    cfg = HertzConfig((1.0, 1.0, 0.0)) if cfg is None else cfg
    comps = em_components(pulses.field("f", params, nu=nu), cfg, stencil, params.c)

    def ex(rho, z, t):
        shape = np.shape(np.broadcast_arrays(rho, z, t)[0])
        return comps(rho, z, t)[:, 0].reshape(shape).astype(complex)
    return peak_geometry(ex, ct, part="re", half_width=half_width, rho_max=rho_max)


# ------------------------------------------------------------------ acoustics


def acoustic_terms(fn_cart: Callable, x, y, z, ct, rho0: float = 1.0, c: float = 1.0,
                   cfg: StencilConfig = DEFAULT_STENCIL, strict: bool = True):
    """``v = -grad Re f`` (shape ``(N, 3)``) and ``p = rho0 c d(Re f)/dct`` at coordinate arrays."""
    co = (x, y, z, ct)

    def re(*a):
        return np.real(fn_cart(*a))
    v = -np.stack([np.ravel(_diff(re, co, o, cfg, strict=strict))
                   for o in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))], axis=-1)
    p = rho0 * c * np.ravel(_diff(re, co, (0, 0, 0, 1), cfg, strict=strict))
    return v, p


def acoustic_observables(field_fn: Callable, points, rho0: float = 1.0, stencil: StencilConfig = DEFAULT_STENCIL,
                         c: float = 1.0, cartesian: bool = False) -> AcousticSample:
    """Velocity ``-grad Re f`` and excess pressure ``rho0 dRe f/dt`` at ``points``.

    Raises
    ------
    StencilError
        If a stencil footprint touches a singularity.
    """
    p = _points4(points)
    v, pr = acoustic_terms(_cartesian(field_fn, cartesian), p[:, 0], p[:, 1], p[:, 2], p[:, 3], rho0, c, stencil)
    return AcousticSample(v, pr, rho0)


def fluid_residuals(field_fn: Callable, points, rho0: float = 1.0, stencil: StencilConfig = RESIDUAL_STENCIL,
                    c: float = 1.0, cartesian: bool = False, reject_singular: bool = False) -> ResidualReport:
    """Linearized continuity and Euler residuals of the acoustic field.

    Continuity ``d rho'/dt + rho0 div v`` with ``rho' = p/c**2`` and Euler
    ``rho0 dv/dt + grad p``, each divided by its largest term.  The larger of
    the two is ``residual``; ``extra`` also holds the ratio
    ``|(v . grad) v| / |dv/dt|`` of the neglected convective term.
    """
    pts = _points4(points)
    fc = _cartesian(field_fn, cartesian)

    def vfun(x, y, z, ct):
        return acoustic_terms(fc, x, y, z, ct, rho0, c, stencil)[0]

    def pfun(x, y, z, ct):
        return acoustic_terms(fc, x, y, z, ct, rho0, c, stencil)[1]

    outer = _outer(stencil)

    def run(q):
        co = (q[:, 0], q[:, 1], q[:, 2], q[:, 3])
        axes = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))
        dv = [_diff(vfun, co, o, outer) for o in axes]
        vt = c * _diff(vfun, co, (0, 0, 0, 1), outer)
        pt = c * _diff(pfun, co, (0, 0, 0, 1), outer)
        gp = np.stack([_diff(pfun, co, o, outer) for o in axes], axis=-1)
        v = vfun(*co)
        return dv, vt, pt, gp, v

    (dv, vt, pt, gp, v), kept, rejected = _reject(run, pts, reject_singular)
    div_terms = np.stack([rho0 * dv[i][:, i] for i in range(3)])
    cont = pt / c**2 + div_terms.sum(axis=0)
    cont_norm = np.max(np.abs(np.vstack([pt[None, :] / c**2, div_terms])), axis=0)
    euler = np.linalg.norm(rho0 * vt + gp, axis=-1)
    euler_norm = np.maximum(np.linalg.norm(rho0 * vt, axis=-1), np.linalg.norm(gp, axis=-1))
    convective = sum(v[:, i:i + 1] * dv[i] for i in range(3))
    with np.errstate(divide="ignore", invalid="ignore"):
        rc = np.where(cont_norm > 0, np.abs(cont) / cont_norm, 0.0)
        re_ = np.where(euler_norm > 0, euler / euler_norm, 0.0)
        ratio = np.linalg.norm(convective, axis=-1) / np.linalg.norm(vt, axis=-1)
    return ResidualReport(kept, np.maximum(rc, re_), np.ones(len(kept)), rejected,
                          {"continuity": rc, "euler": re_, "convective_ratio": ratio})


def acoustic_asymptotics(field_fn: Callable, ray: RaySpec | None = None, rho0: float = 1.0, c: float = 1.0,
                         stencil: StencilConfig = DEFAULT_STENCIL) -> dict[str, LimitResult]:
    """Limit probes of ``ct * (v_x, v_y, v_z, p)`` along ``ray`` in the plane ``y = 0``."""
    ray = RaySpec("forward-z") if ray is None else ray
    fc = as_cartesian(field_fn)

    def comps(x, z, ct):
        v, p = acoustic_terms(fc, x, np.zeros_like(x), z, ct, rho0, c, stencil)
        return np.column_stack([v, p])
    return _probe_components(comps, ("v_x", "v_y", "v_z", "p"), ray)


def rayleigh_distance(a1: float, r_a: float, c: float = 1.0) -> float:
    """Range ``omega_max r_a**2 / (2c)`` with ``omega_max = 4c/a1``, i.e. ``2 r_a**2/a1``."""
    if not (a1 > 0 and r_a > 0 and c > 0):
        raise ValueError("a1, r_a and c must be positive")
    omega_max = 4.0 * c / a1
    return omega_max * r_a**2 / (2.0 * c)


__all__ = [
    "COMPONENTS", "HertzConfig", "EMSample", "AcousticSample", "PolarizationWarning", "EMAsymptotics",
    "RESIDUAL_STENCIL", "rs_vector", "hertz_to_rs", "maxwell_residual", "swap_xy", "em_components", "em_asymptotics",
    "term_asymptotics", "em_solid_angle", "acoustic_terms", "acoustic_observables", "fluid_residuals",
    "acoustic_asymptotics", "rayleigh_distance", "SamplingError", "StencilError",
]
