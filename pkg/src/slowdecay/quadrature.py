"""Deterministic adaptive quadrature used by the energy and synthesis code.

The integrand is always evaluated on whole batches of nodes, so a callable
``fn(x) -> array`` is called once per refinement round.  Vector-valued
integrands (shape ``(len(x), m)``) share one partition; the error norm is
the largest component error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_W = np.zeros(15)
GAUSS_W[[1, 3, 5]] = _WG[:3]
GAUSS_W[[9, 11, 13]] = _WG[2::-1]
GAUSS_W[7] = _WG[3]


class QuadratureError(RuntimeError):
    """Quadrature failed; ``trace`` holds the partial values reached."""

    def __init__(self, message: str, trace: Sequence = ()):
        super().__init__(message)
        self.trace = list(trace)


@dataclass
class QuadratureResult:
    value: float | complex | np.ndarray
    error: float
    evaluations: int
    converged: bool
    trace: list = field(default_factory=list)
    divergent: bool = False

    def __post_init__(self) -> None:
        if self.converged and self.divergent:
            raise ValueError("a result cannot be both converged and divergent")


def _gk_batch(fn, lo, hi):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    x = c[:, None] + h[:, None] * NODES[None, :]
    y = np.asarray(fn(x.ravel()))
    y = y.reshape((lo.size, 15) + y.shape[1:])
    if not np.all(np.isfinite(y)):
        bad = np.argwhere(~np.isfinite(y.reshape(lo.size, 15, -1)).all(axis=2))[0]
        raise QuadratureError(f"non-finite integrand near x={x[bad[0], bad[1]]!r}")
    hk = h.reshape((-1,) + (1,) * (y.ndim - 2))
    kron = hk * np.tensordot(KRONROD_W, y, axes=([0], [1]))
    gauss = hk * np.tensordot(GAUSS_W, y, axes=([0], [1]))
    diff = np.abs(kron - gauss).reshape(lo.size, -1)
    return kron, diff


def integrate(
    fn: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    epsabs: float = 1e-13,
    epsrel: float = 1e-10,
    limit: int = 4000,
    points: Sequence[float] = (),
    tail_power: float = 1.0,
    tail_scale: float = 1.0,
    componentwise: bool = False,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integral of ``fn`` over ``[a, b]``.

    A semi-infinite upper end is compactified with
    ``x = a + s*((1 - t)**-m - 1)`` where ``m = tail_power`` and
    ``s = tail_scale``; an integrand decaying like ``x**-p`` becomes regular
    at ``t = 1`` once ``m >= 1/(p - 1)``.  ``(-inf, b]`` is reflected and
    ``(-inf, inf)`` split at 0.

    With ``componentwise`` each component of a vector-valued integrand must
    meet the relative tolerance on its own, instead of relative to the
    largest component.
    """
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=limit, tail_power=tail_power, tail_scale=tail_scale,
              componentwise=componentwise)
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, True, [0.0])
    if b < a:
        res = integrate(fn, b, a, points=points, **kw)
        res.value = -res.value
        res.trace = [-v for v in res.trace]
        return res
    if math.isinf(a) and math.isinf(b):
        kw["epsabs"] = epsabs / 2
        left = integrate(lambda x: fn(-x), 0.0, math.inf, points=[-p for p in points if p < 0], **kw)
        right = integrate(fn, 0.0, math.inf, points=[p for p in points if p > 0], **kw)
        return QuadratureResult(left.value + right.value, left.error + right.error,
                                left.evaluations + right.evaluations, left.converged and right.converged,
                                [left.value + right.value])
    if math.isinf(a):
        return integrate(lambda x: fn(-x), -b, math.inf, points=[-p for p in points], **kw)
    if math.isinf(b):
        m, s = float(tail_power), float(tail_scale)

        def mapped(t):
            one = 1.0 - t
            x = a + s * (one ** -m - 1.0)
            jac = s * m * one ** (-m - 1.0)
            y = np.asarray(fn(x))
            return y * jac.reshape((-1,) + (1,) * (y.ndim - 1))

        tpts = [1.0 - (1.0 + (p - a) / s) ** (-1.0 / m) for p in points if p > a]
        return _adaptive(mapped, 0.0, 1.0, epsabs, epsrel, limit, tpts, componentwise)
    return _adaptive(fn, float(a), float(b), epsabs, epsrel, limit, [p for p in points if a < p < b], componentwise)


def _adaptive(fn, a, b, epsabs, epsrel, limit, points, componentwise=False):
    edges = np.array(sorted({a, b, *points}), dtype=float)
    lo, hi = edges[:-1], edges[1:]
    vals, diffs = _gk_batch(fn, lo, hi)
    evals = 15 * lo.size
    trace = []
    while True:
        total = vals.sum(axis=0)
        trace.append(total if np.ndim(total) else total.item())
        mag = np.abs(total).ravel()
        if componentwise:
            # error of each interval measured against its own component's tolerance
            tol_i = np.maximum(epsabs, epsrel * mag)
            errs = (diffs / tol_i[None, :]).max(axis=1)
            err = float(errs.sum())
            tol = 1.0
        else:
            errs = diffs.max(axis=1)
            err = float(errs.sum())
            tol = max(epsabs, epsrel * float(np.max(mag)))
        if err <= tol:
            if componentwise:
                err = float(diffs.sum(axis=0).max())
            return QuadratureResult(trace[-1], err, evals, True, trace)
        if lo.size >= limit:
            if componentwise:
                err = float(diffs.sum(axis=0).max())
            return QuadratureResult(trace[-1], err, evals, False, trace)
        # split the worst intervals that carry half of the total error
        order = np.argsort(-errs, kind="stable")
        cum = np.cumsum(errs[order])
        k = int(np.searchsorted(cum, 0.5 * err)) + 1
        k = max(1, min(k, 256, limit - lo.size))
        pick = np.sort(order[:k])
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nv, nd = _gk_batch(fn, new_lo, new_hi)
        evals += 15 * new_lo.size
        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        diffs = np.concatenate([diffs[keep], nd])
        srt = np.argsort(lo, kind="stable")
        lo, hi, vals, diffs = lo[srt], hi[srt], vals[srt], diffs[srt]


def wynn_epsilon(partial_sums: Sequence[complex]) -> tuple[complex, float]:
    """Accelerate a sequence of partial sums; returns ``(limit, error)``.

    The error is the distance between the two most recent even-column
    estimates.
    """
    s = np.asarray(partial_sums, dtype=complex)
    n = s.size
    if n < 3:
        return complex(s[-1]), float("inf")
    eps_prev = np.zeros(n + 1, dtype=complex)
    eps_cur = s.copy()
    estimates = [s[-1]]
    for k in range(1, n):
        diff = eps_cur[1:] - eps_cur[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = eps_prev[1:eps_cur.size] + 1.0 / diff
        if not np.all(np.isfinite(nxt)):
            break
        eps_prev, eps_cur = eps_cur, nxt
        if k % 2 == 0 and eps_cur.size:
            estimates.append(eps_cur[-1])
        if eps_cur.size < 2:
            break
    if len(estimates) < 2:
        return complex(estimates[-1]), float(abs(s[-1] - s[-2]))
    return complex(estimates[-1]), float(abs(estimates[-1] - estimates[-2]))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def halfperiod_sum(
    fn: Callable[[np.ndarray], np.ndarray],
    a: float,
    half_period: float,
    n_pieces: int,
) -> tuple[np.ndarray, int]:
    """Integrals of ``fn`` over ``[a + j*P, a + (j+1)*P]``, ``j < n_pieces``.

    Each piece spans half an oscillation and is integrated with a fixed
    24-point Gauss-Legendre rule; returns the pieces and evaluation count.
    """
    j = np.arange(n_pieces)
    lo = a + j * half_period
    x = lo[:, None] + 0.5 * half_period * (_GL_X[None, :] + 1.0)
    y = np.asarray(fn(x.ravel())).reshape(n_pieces, _GL_X.size)
    return 0.5 * half_period * (y @ _GL_W), x.size


def oscillatory_tail(
    fn: Callable[[np.ndarray], np.ndarray],
    a: float,
    half_period: float,
    n_pieces: int = 40,
) -> QuadratureResult:
    """Integral of a slowly decaying oscillatory ``fn`` over ``[a, inf)``.

    Sums half-period pieces and accelerates the alternating partial sums
    with the Wynn epsilon algorithm.
    """
    pieces, evals = halfperiod_sum(fn, a, half_period, n_pieces)
    partial = np.cumsum(pieces)
    value, err = wynn_epsilon(partial)
    return QuadratureResult(value, err, evals, bool(np.isfinite(err)), list(partial))
