"""Closed-form pulse families and their decompositions.

All functions take ``(rho, z, ct)`` (scalars or broadcastable arrays, or a
single :class:`~slowdecay.core.FieldPoint` in place of ``rho``) plus
:class:`~slowdecay.core.PulseParams` and return complex values of the
broadcast shape.  Scalars in give a Python ``complex`` out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np
from scipy.special import gamma

from . import kernels
from .core import FieldPoint, PulseParams
from .quadrature import QuadratureError, integrate

DEFAULT = PulseParams()


class SingularSplitError(ValueError):
    """The expanding/converging split is undefined at R = 0."""


def _flat(rho, z, ct):
    if isinstance(rho, FieldPoint):
        rho, z, ct = rho.rho, rho.z, rho.ct
    rho, z, ct = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho, z, ct)))
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    shape = rho.shape
    flat = tuple(np.ascontiguousarray(a).ravel() for a in (rho, z, ct))
    return flat, shape


def _shape(out, shape):
    out = np.asarray(out).reshape(shape)
    return complex(out) if out.ndim == 0 else out


def _coords(rho, z=None, ct=None):
    if isinstance(rho, FieldPoint):
        return rho.rho, rho.z, rho.ct
    return rho, z, ct


def splash_psi(rho, z=None, ct=None, params: PulseParams = DEFAULT):
    """Splash pulse ``1/((ct + i cts)**2 - R**2)``."""
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    return _shape(kernels.backend.psi(r, zz, t, params.cts), shape)


def _require_R(r, zz):
    if np.any(np.hypot(r, zz) == 0):
        raise SingularSplitError("expanding/converging split is undefined at R = 0")


def splash_split(rho, z=None, ct=None, params: PulseParams = DEFAULT):
    """Expanding and converging parts ``(psi_plus, psi_minus)`` with ``psi = psi_plus - psi_minus``.

    Raises
    ------
    SingularSplitError
        If any point has ``R = 0``.
    """
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    _require_R(r, zz)
    plus, minus = kernels.backend.psi_split(r, zz, t, params.cts)
    return _shape(plus, shape), _shape(minus, shape)


def splash_primitive(rho, z=None, ct=None, params: PulseParams = DEFAULT):
    """Time primitive ``Psi`` of the splash pulse.

    ``(1/2cR) log((w - R)/(w + R))`` with ``w = ct + i cts``; the log is
    taken of the assembled ratio.  Near ``R = 0`` the even series in
    ``R/w`` is used, which gives ``-1/(c w)`` on the origin itself.
    """
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    return _shape(kernels.backend.Psi(r, zz, t, params.cts, params.c), shape)


def primitive_split(rho, z=None, ct=None, params: PulseParams = DEFAULT):
    """``(Psi_plus, Psi_minus) = (log(w - R), log(w + R))/(2cR)``.

    Both logs are principal.  Since ``Im(w -+ R) = cts > 0`` both
    arguments lie in the upper half plane, so ``Psi_plus - Psi_minus``
    equals the single-ratio primitive with no branch correction.
    """
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    _require_R(r, zz)
    plus, minus = kernels.backend.Psi_split(r, zz, t, params.cts, params.c)
    return _shape(plus, shape), _shape(minus, shape)


@dataclass(frozen=True)
class AuxiliaryRoots:
    """``g = sqrt(rho**2 - w**2)``, ``h = sqrt(rho**2 + z*^2)`` and ``ct* = cts - i ct``."""

    g: np.ndarray | complex
    h: np.ndarray | complex
    ct_star: np.ndarray | complex
    z_star: np.ndarray | complex


def auxiliary_roots(rho, z=None, ct=None, params: PulseParams = DEFAULT) -> AuxiliaryRoots:
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    g, h, s = kernels.backend.aux_roots(r, zz, t, params.cts, params.z_s)
    return AuxiliaryRoots(_shape(g, shape), _shape(h, shape), _shape(s, shape),
                          _shape(zz - 1j * params.z_s, shape))


def unidirectional_u(rho, z=None, ct=None, params: PulseParams = DEFAULT):
    """Unidirectional pulse ``1/(g (i z* + g))``."""
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    return _shape(kernels.backend.u(r, zz, t, params.cts, params.z_s), shape)


def unidirectional_primitive_U(rho, z=None, ct=None, params: PulseParams = DEFAULT):
    """Time primitive of :func:`unidirectional_u`.

    Points with ``h = 0`` (the ring ``rho = z_s`` in the plane ``z = 0``)
    are singular and come back as NaN.
    """
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    out = kernels.backend.U(r, zz, t, params.cts, params.z_s, params.c)
    sing = (zz == 0) & (r == params.z_s)
    if np.any(sing):
        out = np.where(sing, complex(np.nan, np.nan), out)
    return _shape(out, shape)


def fractional_f(rho, z=None, ct=None, params: PulseParams = DEFAULT, nu: float | None = None):
    """Fractional splash pulse ``A**-1 * (a2 - i(z + ct) + rho**2/A)**-(nu + 1)``.

    ``A = a1 + i(z - ct)``.  Both brackets have positive real part for
    ``a1, a2 > 0``, so the principal power is continuous everywhere.
    """
    nu = params.nu if nu is None else float(nu)
    if not nu > -1:
        raise ValueError(f"nu must exceed -1, got {nu}")
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    return _shape(kernels.backend.f(r, zz, t, params.a1, params.a2, nu), shape)


def fwm_G(rho, z=None, ct=None, params: PulseParams = DEFAULT, k: float = 1.0):
    """Focus wave mode ``exp(-k rho**2/A + i k (z + ct))/A``."""
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    return _shape(kernels.backend.G(r, zz, t, params.a1, float(k)), shape)


def spectrum_F(k, params: PulseParams = DEFAULT, nu: float | None = None):
    """Spectral weight ``k**nu exp(-a2 k)/Gamma(nu + 1)`` for ``k > 0``."""
    nu = params.nu if nu is None else float(nu)
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("spectrum is defined for k > 0 only")
    out = np.exp(nu * np.log(k) - params.a2 * k) / gamma(nu + 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Synthesis:
    value: np.ndarray | complex
    error: float
    evaluations: int
    converged: bool


def spectral_synthesize(
    rho,
    z=None,
    ct=None,
    params: PulseParams = DEFAULT,
    nu: float | None = None,
    epsabs: float = 1e-13,
    epsrel: float = 1e-11,
    limit: int = 4000,
) -> Synthesis:
    """Superpose focus wave modes with the spectral weight over ``k > 0``.

    With ``k = s**(1/(nu + 1))`` the weight ``k**nu dk`` becomes
    ``ds/(nu + 1)``, so the integrand in ``s`` is bounded at the origin
    for every ``nu > -1``.  All points share one adaptive partition.

    Raises
    ------
    QuadratureError
        If the partition budget is exhausted before the tolerance is met.
    """
    nu = params.nu if nu is None else float(nu)
    if not nu > -1:
        raise ValueError(f"nu must exceed -1, got {nu}")
    (r, zz, t), shape = _flat(*_coords(rho, z, ct))
    p = nu + 1.0
    A = params.a1 + 1j * (zz - t)
    q = r * r / A
    sigma = zz + t
    norm = 1.0 / (A * gamma(nu + 2.0))

    def integrand(s):
        k = s[:, None] ** (1.0 / p)
        return np.exp(-k * (params.a2 + q[None, :]) + 1j * k * sigma[None, :]) * norm[None, :]

    res = integrate(integrand, 0.0, math.inf, epsabs=epsabs, epsrel=epsrel, limit=limit,
                    tail_scale=(1.0 / params.a2) ** p)
    if not res.converged:
        raise QuadratureError(f"spectral synthesis not converged (error {res.error:.3g})", res.trace)
    return Synthesis(_shape(res.value, shape), res.error, res.evaluations, res.converged)


def synthesis_constant(
    params: PulseParams = DEFAULT,
    nu: float | None = None,
    n_points: int = 20,
    seed: int = 0,
) -> tuple[complex, float]:
    """Ratio of the spectral synthesis to the closed form.

    Returns the mean ratio over ``n_points`` random points and its relative
    spread ``max|ratio - mean|/|mean|``.
    """
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.0, 3.0, n_points)
    z = rng.uniform(-5.0, 5.0, n_points)
    ct = rng.uniform(-5.0, 5.0, n_points)
    synth = spectral_synthesize(rho, z, ct, params, nu).value
    ratio = synth / fractional_f(rho, z, ct, params, nu)
    mean = complex(np.mean(ratio))
    return mean, float(np.max(np.abs(ratio - mean)) / abs(mean))


def _part(fn, index):
    def inner(rho, z, ct):
        return fn(rho, z, ct)[index]
    return inner


PULSE_NAMES = ("psi", "psi_plus", "psi_minus", "Psi", "Psi_plus", "Psi_minus", "u", "U", "f", "G")


def field(name: str, params: PulseParams = DEFAULT, **kw) -> Callable:
    """Return ``fn(rho, z, ct)`` for a pulse selected by name.

    ``f`` accepts ``nu``; ``G`` accepts ``k``.
    """
    table = {
        "psi": splash_psi,
        "Psi": splash_primitive,
        "u": unidirectional_u,
        "U": unidirectional_primitive_U,
        "f": fractional_f,
        "G": fwm_G,
    }
    if name in ("psi_plus", "psi_minus"):
        return _part(partial(splash_split, params=params), 0 if name == "psi_plus" else 1)
    if name in ("Psi_plus", "Psi_minus"):
        return _part(partial(primitive_split, params=params), 0 if name == "Psi_plus" else 1)
    if name not in table:
        raise KeyError(f"unknown pulse {name!r}; expected one of {PULSE_NAMES}")
    allowed = {"f": {"nu"}, "G": {"k"}}.get(name, set())
    extra = set(kw) - allowed
    if extra:
        raise TypeError(f"pulse {name!r} does not take {sorted(extra)}")
    fn = partial(table[name], params=params, **kw)
    fn.__name__ = name  # type: ignore[attr-defined]
    return fn
