# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pulse kernels, one loop per pulse family.

Mirrors ``_pykernels`` function by function; see that module for the branch
and cancellation policy.  Loops run without the GIL so callers may split a
grid across threads.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport hypot, log1p, atan2, fabs, log, exp, cos, sin
from libc.complex cimport csqrt, clog, cexp, cabs, creal, cimag

cnp.import_array()

NAME = "cython"

ctypedef double complex cplx

cdef double SERIES_CUT = 1e-3
cdef cplx I = 1j


cdef inline cplx _log1p(cplx x) noexcept nogil:
    cdef double re = creal(x)
    cdef double im = cimag(x)
    return 0.5 * log1p(re * (2.0 + re) + im * im) + I * atan2(im, 1.0 + re)


cdef inline cplx _log_ratio(cplx w, cplx s, cplx d2) noexcept nogil:
    cdef cplx dm = w - s
    cdef cplx dp = w + s
    cdef cplx x
    if cabs(dm) < cabs(dp):
        dm = d2 / dp
    else:
        dp = d2 / dm
    x = -2.0 * s / dp
    if cabs(x) < 0.5:
        return _log1p(x)
    return clog(dm / dp)


cdef inline cplx _principal_sqrt(cplx x) noexcept nogil:
    cdef cplx r = csqrt(x)
    if creal(r) == 0.0 and cimag(r) < 0.0:
        return -r
    return r


def psi(const double[::1] rho, const double[::1] z, const double[::1] ct, double cts):
    cdef Py_ssize_t i, n = rho.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef cplx w
    cdef double R
    with nogil:
        for i in range(n):
            w = ct[i] + I * cts
            R = hypot(rho[i], z[i])
            o[i] = 1.0 / ((w - R) * (w + R))
    return out


def psi_split(const double[::1] rho, const double[::1] z, const double[::1] ct, double cts):
    cdef Py_ssize_t i, n = rho.shape[0]
    plus = np.empty(n, dtype=np.complex128)
    minus = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] p = plus
    cdef cplx[::1] m = minus
    cdef cplx w
    cdef double R
    with nogil:
        for i in range(n):
            w = ct[i] + I * cts
            R = hypot(rho[i], z[i])
            p[i] = 1.0 / (2.0 * R * (ct[i] - R + I * cts))
            m[i] = 1.0 / (2.0 * R * (w + R))
    return plus, minus


def Psi(const double[::1] rho, const double[::1] z, const double[::1] ct, double cts, double c):
    cdef Py_ssize_t i, n = rho.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef cplx w, x, x2
    cdef double R
    with nogil:
        for i in range(n):
            w = ct[i] + I * cts
            R = hypot(rho[i], z[i])
            x = R / w
            if cabs(x) < SERIES_CUT:
                x2 = x * x
                o[i] = -(1.0 + x2 * (1.0 / 3.0 + x2 * (0.2 + x2 / 7.0))) / (c * w)
            else:
                o[i] = _log_ratio(w, R, (w - R) * (w + R)) / (2.0 * c * R)
    return out


def Psi_split(const double[::1] rho, const double[::1] z, const double[::1] ct, double cts, double c):
    cdef Py_ssize_t i, n = rho.shape[0]
    plus = np.empty(n, dtype=np.complex128)
    minus = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] p = plus
    cdef cplx[::1] m = minus
    cdef cplx w
    cdef double R
    with nogil:
        for i in range(n):
            w = ct[i] + I * cts
            R = hypot(rho[i], z[i])
            p[i] = clog(w - R) / (2.0 * c * R)
            m[i] = clog(w + R) / (2.0 * c * R)
    return plus, minus


cdef struct Roots:
    cplx w
    cplx zst
    double rho2
    cplx g
    cplx h
    cplx wh2


cdef inline Roots _roots(double rho, double z, double ct, double cts, double zs) noexcept nogil:
    cdef Roots r
    cdef cplx g2, zst2, p1
    cdef double m1, m2
    r.w = ct + I * cts
    r.zst = z - I * zs
    r.rho2 = rho * rho
    g2 = (rho - r.w) * (rho + r.w)
    r.g = csqrt(g2)
    zst2 = r.zst * r.zst
    r.h = _principal_sqrt(r.rho2 + zst2)
    p1 = (r.w - r.zst) * (r.w + r.zst)
    m1 = max(cabs(p1), r.rho2)
    m2 = max(cabs(g2), cabs(zst2))
    if m1 <= m2:
        r.wh2 = p1 - r.rho2
    else:
        r.wh2 = -(g2 + zst2)
    return r


def aux_roots(const double[::1] rho, const double[::1] z, const double[::1] ct, double cts, double zs):
    cdef Py_ssize_t i, n = rho.shape[0]
    g_out = np.empty(n, dtype=np.complex128)
    h_out = np.empty(n, dtype=np.complex128)
    s_out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] go = g_out
    cdef cplx[::1] ho = h_out
    cdef cplx[::1] so = s_out
    cdef Roots r
    with nogil:
        for i in range(n):
            r = _roots(rho[i], z[i], ct[i], cts, zs)
            go[i] = r.g
            ho[i] = r.h
            so[i] = cts - I * ct[i]
    return g_out, h_out, s_out


def u(const double[::1] rho, const double[::1] z, const double[::1] ct, double cts, double zs):
    cdef Py_ssize_t i, n = rho.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef Roots r
    cdef cplx iz, dp, dm
    with nogil:
        for i in range(n):
            r = _roots(rho[i], z[i], ct[i], cts, zs)
            iz = I * r.zst
            dp = iz + r.g
            dm = iz - r.g
            if cabs(dp) < cabs(dm):
                dp = r.wh2 / dm
            o[i] = 1.0 / (r.g * dp)
    return out


def U(const double[::1] rho, const double[::1] z, const double[::1] ct, double cts, double zs, double c):
    cdef Py_ssize_t i, n = rho.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef Roots r
    cdef cplx cst, u1, u2, a_p, a_m, b_p, b_m, ab, bb, ab2, bb2, q
    cdef double rho4
    cdef bint sa, sb
    with nogil:
        for i in range(n):
            r = _roots(rho[i], z[i], ct[i], cts, zs)
            cst = cts - I * ct[i]
            u1 = _log_ratio(r.w, -r.h, r.wh2)
            if r.zst == 0:
                u2 = 0
            else:
                a_p = cst * r.zst + r.g * r.h
                a_m = cst * r.zst - r.g * r.h
                b_p = r.zst + r.h
                b_m = r.zst - r.h
                sa = cabs(a_p) >= cabs(a_m)
                sb = cabs(b_p) >= cabs(b_m)
                ab = a_p if sa else a_m
                bb = b_p if sb else b_m
                ab2 = ab * ab
                bb2 = bb * bb
                rho4 = r.rho2 * r.rho2
                if sa and sb:
                    q = -ab2 / (r.wh2 * bb2)
                elif sa:
                    q = -ab2 * bb2 / (rho4 * r.wh2)
                elif sb:
                    q = -rho4 * r.wh2 / (ab2 * bb2)
                else:
                    q = -r.wh2 * bb2 / ab2
                u2 = clog(q)
            o[i] = (u1 + u2) / (2.0 * c * r.h)
    return out


def f(const double[::1] rho, const double[::1] z, const double[::1] ct, double a1, double a2, double nu):
    cdef Py_ssize_t i, n = rho.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef double tau, inv, ar, ai, br, bi, p, mag, ph, r2, er, ei
    p = nu + 1.0
    with nogil:
        for i in range(n):
            # 1/A with A = a1 + i*tau
            tau = z[i] - ct[i]
            inv = 1.0 / (a1 * a1 + tau * tau)
            ar = a1 * inv
            ai = -tau * inv
            r2 = rho[i] * rho[i]
            br = a2 + r2 * ar
            bi = -(z[i] + ct[i]) + r2 * ai
            # B**-(nu+1) on the principal branch
            mag = exp(-0.5 * p * log(br * br + bi * bi))
            ph = -p * atan2(bi, br)
            er = mag * cos(ph)
            ei = mag * sin(ph)
            o[i] = (er * ar - ei * ai) + I * (er * ai + ei * ar)
    return out


def G(const double[::1] rho, const double[::1] z, const double[::1] ct, double a1, double k):
    cdef Py_ssize_t i, n = rho.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef double tau, inv, ar, ai, r2, er, ei, mag, ph
    with nogil:
        for i in range(n):
            tau = z[i] - ct[i]
            inv = 1.0 / (a1 * a1 + tau * tau)
            ar = a1 * inv
            ai = -tau * inv
            r2 = rho[i] * rho[i]
            mag = exp(-k * r2 * ar)
            ph = -k * r2 * ai + k * (z[i] + ct[i])
            er = mag * cos(ph)
            ei = mag * sin(ph)
            o[i] = (er * ar - ei * ai) + I * (er * ai + ei * ar)
    return out
