"""Pure numpy implementations of the closed-form pulse kernels.

Every function takes 1-D float64 arrays ``rho, z, ct`` of equal length plus
scalar shape parameters and returns a complex128 array.  The compiled module
``_ckernels`` mirrors these functions one to one; this module is the
reference the compiled core is tested against.

Branch policy: principal square roots, logarithms and powers throughout.
Logarithms are always taken of an assembled ratio.  Factors that cancel
catastrophically (``w - h`` near the pulse peak, ``z* + h`` near the axis,
...) are rebuilt from the product of the conjugate pair, which is known in
closed form.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_SERIES_CUT = 1e-3


def _log1p(x):
    # accurate principal log(1 + x) for complex x near 0
    re = x.real
    im = x.imag
    return 0.5 * np.log1p(re * (2.0 + re) + im * im) + 1j * np.arctan2(im, 1.0 + re)


def _log_ratio(w, s, d2):
    """log((w - s)/(w + s)) with ``d2 = w**2 - s**2`` supplied exactly."""
    dm = w - s
    dp = w + s
    small_m = np.abs(dm) < np.abs(dp)
    with np.errstate(divide="ignore", invalid="ignore"):
        dm = np.where(small_m, d2 / dp, dm)
        dp = np.where(small_m, dp, d2 / dm)
        x = -2.0 * s / dp
        near = np.abs(x) < 0.5
        out = np.where(near, _log1p(np.where(near, x, 0.0)), np.log(dm / dp))
    return out


def _principal_sqrt(x):
    r = np.sqrt(x)
    flip = (r.real == 0.0) & (r.imag < 0.0)
    return np.where(flip, -r, r)


def psi(rho, z, ct, cts):
    w = ct + 1j * cts
    R = np.hypot(rho, z)
    return 1.0 / ((w - R) * (w + R))


def psi_split(rho, z, ct, cts):
    w = ct + 1j * cts
    R = np.hypot(rho, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        plus = 1.0 / (2.0 * R * (ct - R + 1j * cts))
        minus = 1.0 / (2.0 * R * (w + R))
    return plus, minus


def Psi(rho, z, ct, cts, c):
    w = ct + 1j * cts
    R = np.hypot(rho, z)
    x = R / w
    x2 = x * x
    series = -(1.0 + x2 * (1.0 / 3.0 + x2 * (0.2 + x2 / 7.0))) / (c * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        full = _log_ratio(w, R, (w - R) * (w + R)) / (2.0 * c * R)
    return np.where(np.abs(x) < _SERIES_CUT, series, full)


def Psi_split(rho, z, ct, cts, c):
    w = ct + 1j * cts
    R = np.hypot(rho, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        plus = np.log(w - R) / (2.0 * c * R)
        minus = np.log(w + R) / (2.0 * c * R)
    return plus, minus


def _unidirectional_roots(rho, z, ct, cts, zs):
    w = ct + 1j * cts
    zst = z - 1j * zs
    rho2 = rho * rho
    g2 = (rho - w) * (rho + w)
    g = np.sqrt(g2)
    zst2 = zst * zst
    h2 = rho2 + zst2
    h = _principal_sqrt(h2)
    # w**2 - h**2 in whichever factorisation has the smaller operands
    p1 = (w - zst) * (w + zst)
    m1 = np.maximum(np.abs(p1), rho2)
    m2 = np.maximum(np.abs(g2), np.abs(zst2))
    wh2 = np.where(m1 <= m2, p1 - rho2, -(g2 + zst2))
    return w, zst, rho2, g, h, wh2


def aux_roots(rho, z, ct, cts, zs):
    w, zst, rho2, g, h, wh2 = _unidirectional_roots(rho, z, ct, cts, zs)
    return g, h, cts - 1j * ct


def u(rho, z, ct, cts, zs):
    w, zst, rho2, g, h, wh2 = _unidirectional_roots(rho, z, ct, cts, zs)
    iz = 1j * zst
    dp = iz + g
    dm = iz - g
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = np.where(np.abs(dp) < np.abs(dm), wh2 / dm, dp)
        return 1.0 / (g * dp)


def U(rho, z, ct, cts, zs, c):
    w, zst, rho2, g, h, wh2 = _unidirectional_roots(rho, z, ct, cts, zs)
    cst = cts - 1j * ct
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u1 = _log_ratio(w, -h, wh2)
        a_p = cst * zst + g * h
        a_m = cst * zst - g * h
        b_p = zst + h
        b_m = zst - h
        sa = np.abs(a_p) >= np.abs(a_m)
        sb = np.abs(b_p) >= np.abs(b_m)
        ab = np.where(sa, a_p, a_m)
        bb = np.where(sb, b_p, b_m)
        ab2 = ab * ab
        bb2 = bb * bb
        rho4 = rho2 * rho2
        q = np.where(
            sa,
            np.where(sb, -ab2 / (wh2 * bb2), -ab2 * bb2 / (rho4 * wh2)),
            np.where(sb, -rho4 * wh2 / (ab2 * bb2), -wh2 * bb2 / ab2),
        )
        u2 = np.where(zst == 0, 0.0, np.log(q))
        return (u1 + u2) / (2.0 * c * h)


def f(rho, z, ct, a1, a2, nu):
    A = a1 + 1j * (z - ct)
    B = a2 - 1j * (z + ct) + rho * rho / A
    return np.exp(-(nu + 1.0) * np.log(B)) / A


def G(rho, z, ct, a1, k):
    A = a1 + 1j * (z - ct)
    return np.exp(-k * rho * rho / A + 1j * k * (z + ct)) / A
