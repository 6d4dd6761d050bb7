"""Square-integrability and total-energy integrals of the fractional pulse.

The spatial integrals are nested polar quadratures: an outer adaptive
integral over ``R`` split into doubling shells, an inner adaptive integral
over the polar angle shared by all ``R`` nodes of a batch.  The azimuthal
factor ``2*pi`` is applied to every spatial and spectral norm here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import pulses
from .calculus import StencilConfig, _diff, _fold_rho
from .core import PulseParams
from .quadrature import QuadratureError, QuadratureResult, halfperiod_sum, integrate, wynn_epsilon

EULER_GAMMA = 0.57721566490153286061
TWO_PI = 2.0 * math.pi


class DivergenceError(ArithmeticError):
    """An integral was detected to diverge."""


# ----------------------------------------------------- exponential integral


def _e1_series(x):
    # E1(x) = -gamma - ln x + sum_{k>=1} (-1)**(k+1) x**k/(k k!)
    term = np.array(x, dtype=float)
    total = term.copy()
    for k in range(2, 80):
        term = -term * x * (k - 1) / (k * k)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return -EULER_GAMMA - np.log(x) + total


def _e1_scaled_cf(x):
    # e**x E1(x) by the modified Lentz continued fraction 1/(x+1-1/(x+3-4/(x+5-...)))
    tiny = 1e-300
    b = x + 1.0
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 400):
        a = -float(i * i)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= 1e-16):
            break
    return h


def exp_integral_E1(x, scaled: bool = False):
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for ``x > 0``.

    Series for ``x <= 1``, continued fraction above.  With ``scaled`` the
    product ``exp(x) * E1(x)`` is returned, which stays finite for large
    ``x``.

    Raises
    ------
    ValueError
        If any ``x <= 0``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise ValueError("E1 is evaluated for x > 0 only")
    flat = np.atleast_1d(xa).ravel()
    out = np.empty_like(flat)
    small = flat <= 1.0
    if small.any():
        xs = flat[small]
        v = _e1_series(xs)
        out[small] = v * np.exp(xs) if scaled else v
    if (~small).any():
        xl = flat[~small]
        v = _e1_scaled_cf(xl)
        out[~small] = v if scaled else v * np.exp(-xl)
    out = out.reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------- spectral side


def _log_gamma2(nu):
    return 2.0 * gammaln(nu + 1.0)


def endpoint_exponent(g: Callable[[np.ndarray], np.ndarray], k0: float = 1e-200) -> float:
    """Local log-log slope of ``g`` near ``k = 0``; ``int_0 g`` diverges iff it is <= -1."""
    k = np.array([k0, k0 * 1e10])
    v = np.asarray(g(k), dtype=float)
    return float(np.log(v[1] / v[0]) / np.log(k[1] / k[0]))


_TINY_K = 1e-280


def _spectral_integral(weight: Callable, params: PulseParams, nu: float, epsrel: float,
                       epsabs: float) -> QuadratureResult:
    """``2 pi * pi/Gamma(nu+1)**2 * int_0^inf weight(k) k**(2nu) exp(-2 a2 k) dk``.

    ``k = s**(1/(2nu+1))`` absorbs the power: ``k**(2nu) dk = ds/(2nu+1)``.
    ``weight(k, log_k)`` receives ``log k`` as well, since ``k`` underflows
    for ``nu`` close to ``-1/2``.
    """
    pref = TWO_PI * math.pi * math.exp(-_log_gamma2(nu))

    def raw(k):
        return weight(k, np.log(k)) * np.exp(2.0 * nu * np.log(k) - 2.0 * params.a2 * k)

    slope = endpoint_exponent(raw)
    if slope <= -1.0:
        return QuadratureResult(math.inf, math.inf, 2, False, [], divergent=True)
    q = 2.0 * nu + 1.0

    def integrand(s):
        with np.errstate(divide="ignore", under="ignore"):
            log_k = np.log(s) / q
            k = np.exp(log_k)
            return weight(k, log_k) * np.exp(-2.0 * params.a2 * k) / q

    res = integrate(integrand, 0.0, math.inf, epsabs=epsabs, epsrel=epsrel,
                    tail_scale=(1.0 / (2.0 * params.a2)) ** q)
    res.value = pref * res.value
    res.error = pref * res.error
    res.trace = [pref * v for v in res.trace]
    return res


def _scaled_e1_weight(a1):
    def weight(k, log_k):
        tiny = k < _TINY_K
        x = np.where(tiny, 1.0, 2.0 * a1 * k)
        # exp(x) E1(x) -> -gamma - ln x as x -> 0
        return np.where(tiny, -EULER_GAMMA - math.log(2.0 * a1) - log_k, exp_integral_E1(x, scaled=True))
    return weight


def _log_bound_weight(a1):
    def weight(k, log_k):
        tiny = k < _TINY_K
        x = np.where(tiny, 1.0, 2.0 * a1 * k)
        return np.where(tiny, -math.log(2.0 * a1) - log_k, np.log1p(1.0 / x))
    return weight


def norm_spectral(params: PulseParams, nu: float | None = None, epsrel: float = 1e-10,
                  epsabs: float = 1e-13) -> QuadratureResult:
    """``2 pi * pi * int exp(2 a1 k) E1(2 a1 k) |F_nu(k)|**2 dk``; divergent for ``nu <= -1/2``."""
    nu = params.nu if nu is None else float(nu)
    return _spectral_integral(_scaled_e1_weight(params.a1), params, nu, epsrel, epsabs)


def bound_B_nu(params: PulseParams, nu: float | None = None, epsrel: float = 1e-10,
               epsabs: float = 1e-13) -> QuadratureResult:
    """Upper bound of :func:`norm_spectral` from ``exp(x) E1(x) < ln(1 + 1/x)``, times ``2 pi``."""
    nu = params.nu if nu is None else float(nu)
    return _spectral_integral(_log_bound_weight(params.a1), params, nu, epsrel, epsabs)


# ------------------------------------------------------------ spatial side


def _angular(density: Callable, R: np.ndarray, epsrel: float, band_z: float | None):
    """``int_0^pi R sin(th) density(R sin th, R cos th) dth`` for each radius in ``R``.

    Integrated over ``u = cos th`` so that ``z = R u`` stays resolved near
    ``z = 0`` at any radius (``cos th`` near ``pi/2`` is not).  The range
    is split at ``u0 = band_z/R``, where a band of width ``~1/R`` sits,
    and each piece is mapped onto ``[0, 1]`` with the band at ``s = 0``.
    """
    u0 = np.clip((0.0 if band_z is None else band_z) / R, -1.0, 1.0)
    lo_jac, hi_jac = u0 + 1.0, 1.0 - u0
    RR = np.concatenate([R, R])[None, :]

    def inner(s):
        s = s[:, None]
        u = np.concatenate([u0 - lo_jac * s, u0 + hi_jac * s], axis=1)
        jac = np.concatenate([lo_jac, hi_jac])[None, :]
        rho = RR * np.sqrt(np.maximum((1.0 - u) * (1.0 + u), 0.0))
        vals = density(rho.ravel(), (RR * u).ravel()).reshape(rho.shape) * RR * jac
        return vals[:, :R.size] + vals[:, R.size:]
    return integrate(inner, 0.0, 1.0, epsabs=1e-300, epsrel=epsrel, componentwise=True)


def _polar_shell(density: Callable, r_lo: float, r_hi: float, epsrel: float, epsabs: float,
                 band_z: float | None = None) -> QuadratureResult:
    """``2 pi int_{r_lo}^{r_hi} R dR int_0^pi R sin(th) density(R sin th, R cos th) dth``."""
    inner_evals = [0]

    def outer(R):
        res = _angular(density, R, epsrel * 0.1, band_z)
        inner_evals[0] += res.evaluations * R.size
        return res.value * R

    res = integrate(outer, r_lo, r_hi, epsabs=epsabs, epsrel=epsrel)
    res.evaluations += inner_evals[0]
    res.value = TWO_PI * res.value
    res.error = TWO_PI * res.error
    res.trace = [TWO_PI * v for v in res.trace]
    return res


def _polar_tail(density: Callable, r0: float, power: float, epsrel: float, epsabs: float,
                band_z: float | None = None) -> QuadratureResult:
    def outer(R):
        return _angular(density, R, epsrel * 0.1, band_z).value * R

    res = integrate(outer, r0, math.inf, epsabs=epsabs, epsrel=epsrel, tail_power=power, tail_scale=r0)
    res.value = TWO_PI * res.value
    res.error = TWO_PI * res.error
    return res


def spatial_integral(
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    r_first: float,
    decay: float,
    epsrel: float = 1e-8,
    epsabs: float = 1e-12,
    max_doublings: int = 40,
    min_doublings: int = 2,
    tail: str = "mapped",
    band_z: float | None = None,
) -> QuadratureResult:
    """Integral of an axisymmetric density over all space.

    Shells ``[0, r1], [r1, 2 r1], ...`` are added while the increments
    shrink.  ``decay`` is the expected power ``p`` in ``R**-p`` of the
    radial integrand; the remainder beyond the last shell is a mapped
    semi-infinite integral.  The result is accepted once three successive
    ``shells + tail`` estimates agree within tolerance.  Increments that
    stop shrinking (ratio >= 1 over three doublings) flag divergence.

    With ``tail="geometric"`` the remainder is instead the geometric series
    ``inc * q/(1 - q)`` with ``q = 2**(1 - decay)``, accepted once the last
    increment ratio is close enough to ``q``.  This never evaluates the
    density beyond the last shell, which suits integrands built from
    finite differences.

    ``band_z`` marks a plane ``z = band_z`` near which the density has a
    band narrowing like ``1/R``; the angular integrals are split there.
    """
    if tail not in ("mapped", "geometric"):
        raise ValueError(f"unknown tail mode {tail!r}")
    total = 0.0
    err = 0.0
    evals = 0
    trace = []
    incs = []
    estimates = []
    r_lo = 0.0
    r_hi = r_first
    power = max(1.0, 1.5 / (decay - 1.0)) if decay > 1.0 else 1.0
    for j in range(max_doublings + 1):
        shell = _polar_shell(density, r_lo, r_hi, epsrel, epsabs, band_z)
        total += shell.value
        err += shell.error
        evals += shell.evaluations
        incs.append(shell.value)
        trace.append(total)
        if len(incs) >= 4 and j >= min_doublings:
            ratios = [incs[-i] / incs[-i - 1] if incs[-i - 1] != 0 else 0.0 for i in (1, 2, 3)]
            if all(r >= 1.0 - 1e-3 for r in ratios):
                return QuadratureResult(total, math.inf, evals, False, trace, divergent=True)
        if tail == "geometric" and j >= min_doublings and decay > 1.0 and incs[-2] != 0:
            q = 2.0 ** (1.0 - decay)
            rest = incs[-1] * q / (1.0 - q)
            # a ratio still drifting towards q bounds the error of the series
            rest_err = 3.0 * abs(rest) * abs(incs[-1] / incs[-2] / q - 1.0)
            estimates.append(total + rest)
            tol = max(epsabs, epsrel * abs(estimates[-1]))
            if rest_err + err <= tol:
                return QuadratureResult(estimates[-1], err + rest_err, evals, True, trace)
        elif j >= min_doublings and decay > 1.0:
            tail = _polar_tail(density, r_hi, power, epsrel, epsabs, band_z)
            evals += tail.evaluations
            estimates.append(total + tail.value)
            if len(estimates) >= 3:
                last = estimates[-3:]
                spread = max(last) - min(last)
                tol = max(epsabs, 10 * epsrel * abs(last[-1]))
                if spread <= tol:
                    return QuadratureResult(estimates[-1], err + tail.error + spread, evals, True, trace)
        r_lo, r_hi = r_hi, 2.0 * r_hi
    if decay <= 1.0:
        return QuadratureResult(total, math.inf, evals, False, trace, divergent=True)
    if not estimates:
        return QuadratureResult(total, math.inf, evals, False, trace)
    spread = max(estimates[-3:]) - min(estimates[-3:])
    return QuadratureResult(estimates[-1], err + spread, evals, False, trace)


def norm_spatial(params: PulseParams, nu: float | None = None, t: float = 0.0, epsrel: float = 1e-8,
                 epsabs: float = 1e-12) -> QuadratureResult:
    """``2 pi int rho drho int dz |f|**2`` of the fractional pulse at time ``t``."""
    nu = params.nu if nu is None else float(nu)
    ct = params.c * t

    def density(rho, z):
        v = pulses.fractional_f(rho, z, np.full_like(rho, ct), params, nu)
        return np.abs(v) ** 2

    # shell increments fall like 2**-(2 nu + 1)
    r1 = max(8.0, 2.0 * abs(ct)) + 4 * (params.a1 + params.a2)
    # |f|**2 keeps a band of width ~a1 around z = ct at every radius
    return spatial_integral(density, r1, decay=2.0 * nu + 2.0, epsrel=epsrel, epsabs=epsabs, band_z=ct)


FAR_STENCIL = StencilConfig(growth=0.5)


def energy_density(field: Callable, cfg: StencilConfig = FAR_STENCIL) -> Callable:
    """``w(rho, z, ct) = |f_ct|**2/2 + |f_rho|**2/2 + |f_z|**2/2`` from stencils.

    The default stencil widens like ``sqrt(R)`` so that nodes stay distinct
    in floating point far out in the integration domain.
    """
    def w(rho, z, ct):
        co = (rho, z, ct)
        f_r = _diff(field, co, (1, 0, 0), cfg, _fold_rho)
        f_z = _diff(field, co, (0, 1, 0), cfg, _fold_rho)
        f_t = _diff(field, co, (0, 0, 1), cfg, _fold_rho)
        return 0.5 * (np.abs(f_r) ** 2 + np.abs(f_z) ** 2 + np.abs(f_t) ** 2)
    return w


def total_energy_scalar(params: PulseParams, nu: float | None = None, t: float = 0.0,
                        field: Callable | None = None, decay: float | None = None,
                        epsrel: float = 1e-7, epsabs: float = 1e-12,
                        cfg: StencilConfig = FAR_STENCIL) -> QuadratureResult:
    """Total energy ``2 pi int rho drho int dz w`` at time ``t``.

    ``field`` defaults to the fractional pulse with ``nu``; any other
    cylindrical field may be passed with the radial ``decay`` power of its
    energy integrand.  For the fractional pulse the shell increments fall
    like ``R**-(4 nu + 3)`` for ``nu < 0`` (measured), and no slower than
    ``R**-(2 nu + 4)`` above, so the default is the smaller of the two.
    """
    nu = params.nu if nu is None else float(nu)
    ct = params.c * t
    if field is None:
        field = pulses.field("f", params, nu=nu)
        decay = min(4.0 * nu + 3.0, 2.0 * nu + 4.0) if decay is None else decay
    elif decay is None:
        decay = 3.0
    w = energy_density(field, cfg)

    def density(rho, z):
        return w(rho, z, np.full_like(rho, ct))

    r1 = max(8.0, 2.0 * abs(ct)) + 4 * (params.a1 + params.a2)
    return spatial_integral(density, r1, decay=decay, epsrel=epsrel, epsabs=epsabs,
                            max_doublings=60, tail="geometric")


@dataclass(frozen=True)
class SpectralBound:
    """Spatial and spectral norms with the bound they must respect."""

    b_nu: QuadratureResult
    norm_spectral: QuadratureResult
    norm_spatial: QuadratureResult | None

    @property
    def bound_holds(self) -> bool:
        tol = self.b_nu.error + self.norm_spectral.error
        return self.norm_spectral.value <= self.b_nu.value + tol

    @property
    def parseval_gap(self) -> float:
        if self.norm_spatial is None:
            return math.nan
        return abs(self.norm_spatial.value - self.norm_spectral.value) / abs(self.norm_spectral.value)


def spectral_bound(params: PulseParams, nu: float | None = None, spatial: bool = True) -> SpectralBound:
    return SpectralBound(bound_B_nu(params, nu), norm_spectral(params, nu),
                         norm_spatial(params, nu) if spatial else None)


# ------------------------------------------------------------ key integral


@dataclass(frozen=True)
class KeyIntegral:
    """Half-line integrals of ``exp(-i dk z)/(2 (lam + i dk z))``.

    ``i1`` covers ``z < 0`` and ``i2`` covers ``z > 0``.  The ``*_trunc``
    values stop at the truncation length (a whole number of periods); the
    others are Wynn-accelerated limits.  ``expected`` is
    ``i E1(lam) exp(lam)/(2 dk)``, the closed form of ``i1 = -i2``.
    """

    lam: float
    dk: float
    truncation: float
    i1: complex
    i2: complex
    i1_trunc: complex
    i2_trunc: complex
    error: float
    expected: complex

    @property
    def total(self) -> complex:
        return self.i1 + self.i2

    @property
    def total_trunc(self) -> complex:
        return self.i1_trunc + self.i2_trunc

    @property
    def half_difference(self) -> complex:
        return 0.5 * (self.i1 - self.i2)

    @property
    def half_difference_trunc(self) -> complex:
        return 0.5 * (self.i1_trunc - self.i2_trunc)


def key_integral_check(lam: float, dk: float, truncation: float = 1e4, accel_pieces: int = 60) -> KeyIntegral:
    """Evaluate both half-line parts of the key integral.

    Each half line is cut into half periods ``pi/|dk|``; the direct sum runs
    to the first whole period beyond ``truncation`` and a separate sum of
    ``accel_pieces`` half periods is Wynn-accelerated to the infinite
    limit.

    Raises
    ------
    QuadratureError
        If the accelerated sequences do not settle.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if dk == 0:
        raise ValueError("dk must be non-zero; the integral is singular at dk = 0")
    half = math.pi / abs(dk)
    n = 2 * int(math.ceil(truncation / (2.0 * half)))

    def g2(z):
        return 0.5 * np.exp(-1j * dk * z) / (lam + 1j * dk * z)

    def g1(z):
        return g2(-z)

    p2, _ = halfperiod_sum(g2, 0.0, half, n)
    p1, _ = halfperiod_sum(g1, 0.0, half, n)
    i2_t, i1_t = complex(p2.sum()), complex(p1.sum())
    a2, e2 = wynn_epsilon(np.cumsum(p2[:accel_pieces]))
    a1, e1 = wynn_epsilon(np.cumsum(p1[:accel_pieces]))
    err = e1 + e2
    if not err < 1e-6:
        raise QuadratureError(f"oscillatory tail did not settle (error {err:.3g})", list(np.cumsum(p2[:accel_pieces])))
    expected = 1j * exp_integral_E1(lam, scaled=True) / (2.0 * dk)
    return KeyIntegral(lam, dk, n * half, a1, a2, i1_t, i2_t, err, expected)
