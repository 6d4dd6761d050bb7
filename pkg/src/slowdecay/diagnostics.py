"""Measurements on pulse fields: ray limits, decay laws, peak geometry,
energy density and flux, backflow and time integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calculus import DEFAULT_STENCIL, StencilConfig, _diff, as_cartesian
from .core import FieldGrid, PulseParams, RaySpec
from .quadrature import integrate

CLASSES = ("finite", "log-divergent", "power-divergent", "zero", "ambiguous")
FIT_R2 = 0.999
MARGIN = 10.0
MIN_POWER = 0.05
ZERO_REL = 1e-6


class FitQualityError(ValueError):
    """A fitted model does not describe the samples."""


class GeometryError(ValueError):
    """No interior peak or half-maximum crossing was found."""


# ---------------------------------------------------------------- limits


@dataclass
class ModelFit:
    name: str
    params: dict
    rss: float
    r2: float
    kind: str


@dataclass
class LimitResult:
    """Classification of ``ct**weight * field`` along a ray.

    ``value`` is the finite limit ``L`` (finite), the slope of ``ln ct``
    (log-divergent) or the coefficient ``K`` of ``K * ct**p``
    (power-divergent); ``exponent`` is ``p``.  ``error`` is the
    extrapolation error bar of ``value`` for finite limits.
    """

    ray: RaySpec
    ct: np.ndarray
    samples: np.ndarray
    classification: str
    value: complex = 0j
    error: float = 0.0
    exponent: float = 0.0
    r2: float = 0.0
    fits: dict = field(default_factory=dict)
    alternatives: tuple = ()

    @property
    def slope(self) -> complex:
        return self.value if self.classification == "log-divergent" else 0j

    @property
    def phase(self) -> float:
        return float(np.angle(self.value))


def _lstsq(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef, y - X @ coef


def _fit_models(ct, y):
    x = np.log(ct)
    s = 1.0 / ct
    one = np.ones_like(ct)
    scale2 = float(np.sum(np.abs(y) ** 2))
    # rounding floor so that exact fits compare equal
    floor = (1e-12 ** 2) * scale2 + 1e-300
    fits = {}

    # finite limit approached in integer or half-integer powers of 1/ct
    best = None
    for basis in ((s, s * s), (np.sqrt(s), s, s * np.sqrt(s))):
        coef, res = _lstsq(np.column_stack([one, *basis]), y)
        rss = float(np.sum(np.abs(res) ** 2))
        if best is None or rss < best[1]:
            best = (coef, rss, len(basis))
    coef, rss, nb = best
    fits["finite"] = ModelFit("finite", {"L": coef[0], "half_powers": nb == 3}, max(rss, floor),
                              1 - rss / scale2, "finite")

    coef, res = _lstsq(np.column_stack([one, x, s]), y)
    rss = float(np.sum(np.abs(res) ** 2))
    fits["log"] = ModelFit("log", {"a": coef[0], "slope": coef[1], "c": coef[2]}, max(rss, floor),
                           1 - rss / scale2, "log-divergent")

    if np.all(np.abs(y) > 0):
        mag = np.log(np.abs(y))
        phs = np.unwrap(np.angle(y))
        cm, _ = _lstsq(np.column_stack([one, x, s]), mag)
        cp, _ = _lstsq(np.column_stack([one, s]), phs)
        model = np.exp(cm[0] + cm[1] * x + cm[2] * s + 1j * (cp[0] + cp[1] * s))
        rss = float(np.sum(np.abs(y - model) ** 2))
        K = complex(np.exp(cm[0] + 1j * cp[0]))
        p = float(cm[1])
        fits["power"] = ModelFit("power", {"K": K, "p": p}, max(rss, floor), 1 - rss / scale2,
                                 "power-divergent" if p > 0 else "zero")
    return fits


def classify(ct: np.ndarray, y: np.ndarray, tail_fraction: float = 2.0 / 3.0) -> dict:
    """Fit the candidate asymptotic models to ``y(ct)`` and pick one.

    Models are fitted on the last ``tail_fraction`` of the samples.  A log
    model competes only if its slope changes ``y`` appreciably across the
    window and a power model only if ``|p| >= 0.05``.  The candidate with
    the smallest residual wins unless a candidate of a different class
    comes within a factor 10, in which case the result is ambiguous.
    """
    ct = np.asarray(ct, dtype=float)
    y = np.asarray(y, dtype=complex)
    start = int(round(len(ct) * (1.0 - tail_fraction)))
    ct_t, y_t = ct[start:], y[start:]
    if not np.any(y_t):
        # underflowed to exact zero: nothing to fit
        fit = ModelFit("finite", {"L": 0j, "half_powers": False}, 0.0, 1.0, "zero")
        return {"fits": {"finite": fit}, "best": fit, "rivals": (), "kind": "zero", "value": 0j, "error": 0.0}
    fits = _fit_models(ct_t, y_t)
    ymax = float(np.max(np.abs(y_t)))
    span = math.log(ct_t[-1] / ct_t[0])

    cands = {"finite": fits["finite"]}
    if abs(fits["log"].params["slope"]) * span > ZERO_REL * ymax:
        cands["log"] = fits["log"]
    if "power" in fits and abs(fits["power"].params["p"]) >= MIN_POWER:
        cands["power"] = fits["power"]

    L = complex(fits["finite"].params["L"])
    if abs(L) <= ZERO_REL * ymax:
        fits["finite"].kind = "zero"

    order = sorted(cands.values(), key=lambda m: m.rss)
    best = order[0]
    rivals = tuple(m for m in order[1:] if m.rss < MARGIN * best.rss and m.kind != best.kind)
    out = {"fits": fits, "best": best, "rivals": rivals}
    if best.r2 < FIT_R2:
        out["kind"] = "ambiguous"
    elif rivals:
        out["kind"] = "ambiguous"
    else:
        out["kind"] = best.kind

    if best.name == "finite":
        # error bar from a shorter model on the last half of the window
        half = len(ct_t) // 2
        s = 1.0 / ct_t[half:]
        lead = np.sqrt(s) if best.params["half_powers"] else s
        coef, _ = _lstsq(np.column_stack([np.ones_like(s), lead]), y_t[half:])
        out["value"] = L
        out["error"] = float(abs(coef[0] - L)) + 1e-15 * abs(L)
    elif best.name == "log":
        out["value"] = complex(best.params["slope"])
        out["error"] = 0.0
    else:
        out["value"] = best.params["K"]
        out["exponent"] = best.params["p"]
        out["error"] = 0.0
    if out["kind"] == "zero":
        out["value"] = 0j
    return out


def _part(values, part):
    if part == "re":
        return values.real.astype(complex)
    if part == "im":
        return values.imag.astype(complex)
    return values


def limit_probe(fn: Callable, ray: RaySpec, weight: float = 1.0, part: str = "complex") -> LimitResult:
    """Evaluate ``ct**weight * fn`` along ``ray`` and classify its behaviour.

    ``fn(rho, z, ct)`` is any vectorized field; ``part`` selects
    ``"complex"``, ``"re"`` or ``"im"``.
    """
    ct = ray.ct_sequence
    rho, z = ray.coordinates(ct)
    vals = _part(np.asarray(fn(np.abs(rho), z, ct), dtype=complex), part)
    y = ct ** weight * vals
    if not np.all(np.isfinite(y)):
        raise FitQualityError("non-finite samples along the ray")
    cl = classify(ct, y)
    return LimitResult(
        ray=ray, ct=ct, samples=y, classification=cl["kind"],
        value=complex(cl["value"]), error=cl["error"], exponent=float(cl.get("exponent", 0.0)),
        r2=cl["best"].r2, fits=cl["fits"], alternatives=tuple(m.kind for m in cl["rivals"]),
    )


# ---------------------------------------------------------- coefficient C


@dataclass(frozen=True)
class CoefficientC:
    value: complex
    re_formula: float
    im_formula: float


def coefficient_C(a1: float, delta: float) -> CoefficientC:
    """Growth coefficient of ``ct*f`` on the forward axis for ``nu = -1/4``.

    ``ct*f ~ C * ct**(1/4)`` with ``C = 1/((-2i)**(3/4) (a1 + i delta))``;
    the real and imaginary parts are also evaluated from their expanded
    trigonometric forms.
    """
    if not a1 > 0:
        raise ValueError("a1 must be positive")
    value = 1.0 / ((-2j) ** 0.75 * (a1 + 1j * delta))
    d = 2.0 ** 0.75 * (a1 * a1 + delta * delta)
    c8, s8 = math.cos(3 * math.pi / 8), math.sin(3 * math.pi / 8)
    return CoefficientC(complex(value), (c8 * a1 + s8 * delta) / d, (s8 * a1 - c8 * delta) / d)


# ------------------------------------------------------------- decay fit


@dataclass(frozen=True)
class DecayFit:
    slope: float
    amplitude: float
    rms_residual: float
    ct: np.ndarray
    samples: np.ndarray


def decay_fit(fn: Callable, ray: RaySpec, window: tuple[float, float] | None = None,
              n: int = 31, max_rms: float = 0.02, weight: float = 1.0) -> DecayFit:
    """Log-log regression of ``|ct**weight * fn|`` along a ray.

    ``window`` defaults to the ray's ct range.  The slope is the growth
    exponent of the weighted field; 0 means normal ``1/distance`` decay.

    Raises
    ------
    FitQualityError
        If the window spans less than 3 decades or the rms residual in
        log space exceeds ``max_rms``.
    """
    lo, hi = window if window is not None else (ray.ct_sequence[0], ray.ct_sequence[-1])
    if hi / lo < 1e3 * (1 - 1e-12):
        raise FitQualityError("decay fits need at least three decades in ct")
    ct = np.geomspace(lo, hi, n)
    rho, z = ray.coordinates(ct)
    y = np.abs(ct ** weight * np.asarray(fn(np.abs(rho), z, ct), dtype=complex))
    if not np.all(y > 0) or not np.all(np.isfinite(y)):
        raise FitQualityError("field vanishes or is non-finite along the ray")
    x = np.log(ct)
    b, a = np.polyfit(x, np.log(y), 1)
    res = np.log(y) - (a + b * x)
    rms = float(np.sqrt(np.mean(res ** 2)))
    if rms > max_rms:
        raise FitQualityError(f"log-log relation is not linear (rms {rms:.3g})")
    return DecayFit(float(b), float(math.exp(a)), rms, ct, y)


# -------------------------------------------------------- peak geometry


@dataclass(frozen=True)
class PeakGeometry:
    """Peak of a pulse at time ``ct`` and the solid angle of its cross-section.

    ``omega = pi * hwhm**2 / ct**2``; ``hwhm`` is the transverse half width
    at half maximum measured in the plane through the on-axis peak.
    """

    ct: float
    rho: float
    z: float
    value: complex
    hwhm: float
    omega: float


def _golden_max(g, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc > gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    return 0.5 * (a + b)


def _partfn(part):
    if part == "re":
        return lambda v: np.abs(np.real(v))
    if part == "im":
        return lambda v: np.abs(np.imag(v))
    return np.abs


def axial_peak(fn: Callable, ct: float, part: str = "re", half_width: float | None = None,
               n_scan: int = 801, tol: float | None = None, signed: bool = False) -> tuple[float, complex]:
    """Location ``z`` and value of the on-axis maximum near ``z = ct``.

    A coarse scan over ``ct +- half_width`` brackets the maximum, then a
    golden-section search refines it.  With ``signed`` the maximum of the
    selected part itself (not its magnitude) is sought.

    Raises
    ------
    GeometryError
        If the maximum sits on the edge of the scan window.
    """
    hw = half_width if half_width is not None else max(10.0, 0.5 * abs(ct))
    tol = tol if tol is not None else 1e-4 * max(1.0, abs(ct)) * 1e-3
    if signed:
        sel = (lambda v: np.real(v)) if part == "re" else (lambda v: np.imag(v))
    else:
        sel = _partfn(part)
    zs = np.linspace(ct - hw, ct + hw, n_scan)
    vals = sel(np.asarray(fn(np.zeros_like(zs), zs, np.full_like(zs, ct))))
    i = int(np.argmax(vals))
    if i == 0 or i == n_scan - 1:
        raise GeometryError("no interior maximum on the axis scan")
    g = lambda zz: float(sel(np.asarray(fn(np.zeros(1), np.array([zz]), np.array([ct]))))[0])
    zp = _golden_max(g, zs[i - 1], zs[i + 1], tol)
    return zp, complex(np.asarray(fn(np.zeros(1), np.array([zp]), np.array([ct])))[0])


def peak_geometry(fn: Callable, ct: float, part: str = "re", half_width: float | None = None,
                  rho_max: float | None = None, tol: float | None = None) -> PeakGeometry:
    """Peak position and solid angle of a pulse at time ``ct``.

    The peak of ``|part(fn)|`` is located on the axis; at that ``z`` the
    transverse profile is scanned outward and the half-maximum crossing
    bisected.  ``fn(rho, z, ct)`` may be any axially peaked field (for a
    Cartesian component pass its cut along ``x`` as ``rho``).
    """
    if not ct > 0:
        raise ValueError("ct must be positive")
    zp, val = axial_peak(fn, ct, part, half_width)
    sel = _partfn(part)
    peak = float(sel(val))
    half = 0.5 * peak
    rmax = rho_max if rho_max is not None else max(10.0, 0.5 * ct)
    rs = np.linspace(0.0, rmax, 2001)
    prof = sel(np.asarray(fn(rs, np.full_like(rs, zp), np.full_like(rs, ct))))
    below = np.flatnonzero(prof < half)
    if below.size == 0:
        raise GeometryError("profile never drops to half maximum")
    j = int(below[0])
    lo, hi = rs[j - 1], rs[j]
    tol = tol if tol is not None else 1e-10 * max(1.0, ct)
    g = lambda r: float(sel(np.asarray(fn(np.array([r]), np.array([zp]), np.array([ct]))))[0]) - half
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    hwhm = 0.5 * (lo + hi)
    return PeakGeometry(ct, 0.0, zp, val, hwhm, math.pi * hwhm * hwhm / (ct * ct))


def peak_shift(fn: Callable, ct: float, half_width: float | None = None) -> tuple[float, float]:
    """On-axis peak offsets ``z - ct`` of ``|Re fn|`` and ``|Im fn|``."""
    zr, _ = axial_peak(fn, ct, "re", half_width)
    zi, _ = axial_peak(fn, ct, "im", half_width)
    return zr - ct, zi - ct


# ------------------------------------------------------------- energetics


@dataclass
class FieldDiagnostics:
    """Scalar energy density ``w``, flux ``S`` (last axis x, y, z) and ``v_E = S/w``.

    ``v_E`` is NaN where ``w == 0``.
    """

    points: np.ndarray
    w: np.ndarray
    S: np.ndarray
    v_E: np.ndarray


def _cart_points(points):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[-1] == 3:
        return np.column_stack([p[:, 0], np.zeros(len(p)), p[:, 1], p[:, 2]])
    if p.shape[-1] != 4:
        raise ValueError("points must be (rho, z, ct) or (x, y, z, ct) rows")
    return p


def energetics_terms(fn_cart: Callable, x, y, z, ct, cfg: StencilConfig = DEFAULT_STENCIL, c: float = 1.0,
                     strict: bool = True):
    """``(w, S)`` of a Cartesian scalar field at arrays of coordinates."""
    co = (x, y, z, ct)
    ft = _diff(fn_cart, co, (0, 0, 0, 1), cfg, strict=strict)
    grad = np.stack([_diff(fn_cart, co, o, cfg, strict=strict) for o in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))], axis=-1)
    w = 0.5 * np.abs(ft) ** 2 + 0.5 * np.sum(np.abs(grad) ** 2, axis=-1)
    S = -c * np.real(np.conj(ft)[..., None] * grad)
    return w, S


def scalar_energetics(fn: Callable, points, cfg: StencilConfig = DEFAULT_STENCIL, c: float = 1.0,
                      cartesian: bool = False) -> FieldDiagnostics:
    """Energy density, flux and transport velocity of a scalar field.

    ``w = |f_ct|**2/2 + |grad f|**2/2`` and ``S = -c Re(conj(f_ct) grad f)``,
    which satisfy ``dw/dt + div S = 0`` for solutions of the wave equation.
    ``points`` are ``(rho, z, ct)`` rows (taken at ``y = 0``) or
    ``(x, y, z, ct)`` rows.
    """
    p = _cart_points(points)
    fc = fn if cartesian else as_cartesian(fn)
    w, S = energetics_terms(fc, p[:, 0], p[:, 1], p[:, 2], p[:, 3], cfg, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(w[:, None] > 0, S / w[:, None], np.nan)
    return FieldDiagnostics(p, w, S, v)


def conservation_residual(fn: Callable, points, cfg: StencilConfig = DEFAULT_STENCIL, c: float = 1.0) -> np.ndarray:
    """Relative residual of ``dw/dt + div S`` from nested stencils.

    Normalized by the largest of ``|dw/dt|`` and the divergence terms.
    """
    p = _cart_points(points)
    fc = as_cartesian(fn)
    outer = StencilConfig(cfg.order, cfg.base_step * 4, False, cfg.scale)

    def wfun(x, y, z, ct):
        return energetics_terms(fc, x, y, z, ct, cfg, c)[0]

    def sfun(x, y, z, ct):
        return energetics_terms(fc, x, y, z, ct, cfg, c)[1]

    co = (p[:, 0], p[:, 1], p[:, 2], p[:, 3])
    wt = c * _diff(wfun, co, (0, 0, 0, 1), outer)
    terms = [_diff(sfun, co, o, outer)[..., i] for i, o in enumerate(((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0)))]
    res = wt + sum(terms)
    norm = np.max(np.abs(np.stack([wt, *terms])), axis=0)
    return np.abs(res) / norm


@dataclass
class BackflowReport:
    mask: np.ndarray
    count: int
    min_vz: float
    min_point: tuple
    max_speed: float


def backflow_scan(fn: Callable, grid: FieldGrid, fixed: dict | None = None,
                  cfg: StencilConfig = DEFAULT_STENCIL, c: float = 1.0) -> BackflowReport:
    """Cells of a grid where the axial energy flux is negative.

    ``grid`` varies two or three of ``x, y, rho, z, ct``; ``fixed``
    supplies the rest.  Cells whose stencils touch a singularity are
    skipped.  Returns the backflow mask in grid shape, the most
    negative ``v_E,z`` and the largest ``|v_E|``.
    """
    coords = dict(fixed or {})
    coords.update(grid.coordinates())
    x = np.asarray(coords.get("x", coords.get("rho", 0.0)), float)
    y = np.asarray(coords.get("y", 0.0), float)
    z = np.asarray(coords["z"], float)
    ct = np.asarray(coords["ct"], float)
    x, y, z, ct = (a.ravel() for a in np.broadcast_arrays(x, y, z, ct))
    w, S = energetics_terms(as_cartesian(fn), x, y, z, ct, cfg, c, strict=False)
    ok = np.isfinite(w) & (w > 1e-300)
    vz = np.where(ok, S[:, 2] / np.where(ok, w, 1.0), np.nan)
    speed = np.where(ok, np.linalg.norm(S, axis=1) / np.where(ok, w, 1.0), np.nan)
    mask = ok & (np.where(ok, S[:, 2], 0.0) < 0)
    i = int(np.nanargmin(vz))
    return BackflowReport(mask.reshape(grid.shape), int(mask.sum()), float(vz[i]),
                          (float(x[i]), float(y[i]), float(z[i]), float(ct[i])), float(np.nanmax(speed)))


# -------------------------------------------------------- time integrals


@dataclass(frozen=True)
class TimeIntegral:
    value: float
    error: float
    tail: float
    tail_bound: float


class TailError(ArithmeticError):
    """The time integral's tails do not converge."""


def _tail_coeffs(g, T):
    ts = T * np.array([1.0, 1.25, 1.5, 1.75, 2.0])
    X = np.column_stack([1.0 / ts, 1.0 / ts ** 2])
    coef, *_ = np.linalg.lstsq(X, g(ts), rcond=None)
    return coef


def strange_integral(fn: Callable, rho: float, z: float, half_window: float, c: float = 1.0,
                     part: str = "im", epsrel: float = 1e-10) -> TimeIntegral:
    """``int part(fn) dt`` over all time at a fixed point.

    The window ``|ct| <= T`` is integrated adaptively.  Beyond it the field
    is modelled as ``a/ct + b/ct**2`` on each side; the odd ``1/ct`` parts
    cancel in the symmetric limit and ``b/T`` terms give the tail.

    Raises
    ------
    TailError
        If the ``1/ct`` coefficients of the two tails differ, so that the
        symmetric limit depends on how the window grows.
    """
    sel = (lambda v: np.imag(v)) if part == "im" else (lambda v: np.real(v))
    T = float(half_window)
    R = math.hypot(rho, z)

    def g(ct):
        ct = np.asarray(ct, dtype=float)
        return sel(np.asarray(fn(np.full_like(ct, rho), np.full_like(ct, z), ct)))

    pts = sorted({p for p in (-R, 0.0, R) if -T < p < T})
    res = integrate(g, -T, T, epsabs=1e-14, epsrel=epsrel, points=pts)
    a_p, b_p = _tail_coeffs(g, T)
    a_m, b_m = _tail_coeffs(lambda t: g(-t), T)
    # g(-s) ~ a_m/s + b_m/s**2 for s > T; the log parts cancel iff a_p = -a_m
    odd_mismatch = abs(a_p + a_m)
    tail = (b_p + b_m) / T
    scale = max(abs(a_p), abs(a_m), abs(b_p) / T, abs(b_m) / T, 1e-300)
    if odd_mismatch > 1e-3 * scale and odd_mismatch * math.log(2.0) > abs(res.value) * 1e-3 + abs(tail):
        raise TailError(f"tails do not cancel (1/ct coefficients {a_p:.3g}, {-a_m:.3g})")
    # bound from the change of the tail model between T and T/2
    a2p, b2p = _tail_coeffs(g, T / 2)
    a2m, b2m = _tail_coeffs(lambda t: g(-t), T / 2)
    bound = abs((b2p + b2m) - (b_p + b_m)) / T + odd_mismatch * math.log(2.0) + res.error
    return TimeIntegral((res.value + tail) / c, res.error / c, tail / c, bound / c)
