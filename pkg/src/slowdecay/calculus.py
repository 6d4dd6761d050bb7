"""Central finite differences for complex fields of real coordinates.

Two calling conventions are used.  *Cylindrical* fields are the pulses,
``fn(rho, z, ct)``, assumed even in ``rho``; stencils that cross the axis
are reflected to ``|rho|``.  *Cartesian* functions take ``(x, y, z, ct)``
and may return trailing vector dimensions.  Every stencil is evaluated in
one vectorized call per derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import FieldPoint

CYL_AXES = ("rho", "z", "ct")
CART_AXES = ("x", "y", "z", "ct")
AXIS_TOL = 1e-4


class StencilError(ArithmeticError):
    """A stencil footprint touched a non-finite field sample."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class SamplingError(ValueError):
    """Too many requested points were rejected as singular."""


@dataclass(frozen=True)
class StencilConfig:
    """Stencil accuracy and step policy.

    Parameters
    ----------
    order : int
        Accuracy order of the central stencils, 4 or 6.
    base_step : float
        Step in units of ``scale``.  The actual step is rounded to the
        nearest power of two so that nodes ``x + j*h`` stay exact.
    richardson : bool
        Combine steps ``h`` and ``h/2`` and report the correction as an
        error estimate.
    scale : float
        Length scale of the field features.
    relative : bool
        Use ``base_step * max(1, |x|)`` instead of a fixed step.
    growth : float
        Grow the step as ``max(1, |x|/scale)**growth``; ``relative`` is
        ``growth = 1``.  ``0.5`` suits far-zone integrands whose features
        widen like the square root of the distance.
    """

    order: int = 6
    base_step: float = float(np.finfo(float).eps ** (1.0 / 7.0))
    richardson: bool = False
    scale: float = 1.0
    relative: bool = False
    growth: float = 0.0

    def __post_init__(self) -> None:
        if self.order not in (4, 6):
            raise ValueError(f"stencil order must be 4 or 6, got {self.order}")
        if not self.base_step > 0:
            raise ValueError("base_step must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def step(self, x=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.relative:
            h = self.base_step * np.maximum(1.0, np.abs(x))
        else:
            h = self.base_step * self.scale * np.maximum(1.0, np.abs(x) / self.scale) ** self.growth
        return np.broadcast_to(2.0 ** np.round(np.log2(h)), x.shape).astype(float)


DEFAULT_STENCIL = StencilConfig()


@lru_cache(maxsize=None)
def stencil_weights(deriv: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the central ``deriv``-th derivative stencil."""
    half = (deriv + order - 1) // 2
    offsets = np.arange(-half, half + 1)
    n = offsets.size
    V = np.vander(offsets.astype(float), n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = math.factorial(deriv)
    w = np.linalg.solve(V, rhs)
    w[np.abs(w) < 1e-14] = 0.0
    keep = w != 0
    return offsets[keep], w[keep]


def _diff(fn, coords: Sequence[np.ndarray], orders: Sequence[int], cfg: StencilConfig, fold=None,
          strict: bool = True):
    """Tensor-product stencil for the mixed derivative ``orders`` of ``fn``.

    With ``strict`` off, singular footprints give NaN instead of raising.
    """
    coords = [np.asarray(c, dtype=float) for c in np.broadcast_arrays(*coords)]
    shape = coords[0].shape
    coords = [c.ravel() for c in coords]
    npts = coords[0].size
    offs, wts, steps = [], [], []
    for c, n in zip(coords, orders):
        if n == 0:
            offs.append(np.zeros(1))
            wts.append(np.ones(1))
            steps.append(np.zeros(npts))
        else:
            o, w = stencil_weights(n, cfg.order)
            h = cfg.step(c)
            offs.append(o.astype(float))
            wts.append(w)
            steps.append(h)
    grids = np.meshgrid(*offs, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for i, w in enumerate(np.meshgrid(*wts, indexing="ij")):
        wgrid = wgrid * w
    grids = [g.ravel() for g in grids]
    wflat = wgrid.ravel()
    m = wflat.size
    shifted = [(c[:, None] + s[:, None] * g[None, :]).ravel() for c, s, g in zip(coords, steps, grids)]
    if fold is not None:
        shifted = fold(shifted)
    vals = np.asarray(fn(*shifted))
    tail = vals.shape[1:]
    vals = vals.reshape((npts, m) + tail)
    finite = np.isfinite(vals).reshape(npts, m, -1).all(axis=(1, 2))
    if strict and not finite.all():
        i = int(np.argmin(finite))
        pt = tuple(float(c[i]) for c in coords)
        err = StencilError(f"stencil footprint is singular near point {pt}", pt)
        err.bad = ~finite.reshape(shape)
        raise err
    denom = np.ones(npts)
    for s, n in zip(steps, orders):
        if n:
            denom = denom * s ** n
    out = np.tensordot(vals, wflat, axes=([1], [0])) if not tail else np.einsum("pm...,m->p...", vals, wflat)
    out = out / denom.reshape((npts,) + (1,) * len(tail))
    return out.reshape(shape + tail)


def _diff_estimate(fn, coords, orders, cfg: StencilConfig, fold=None):
    if not cfg.richardson:
        return _diff(fn, coords, orders, cfg, fold), None
    coarse = _diff(fn, coords, orders, cfg, fold)
    fine_cfg = replace(cfg, base_step=cfg.base_step / 2.0, richardson=False)
    fine = _diff(fn, coords, orders, fine_cfg, fold)
    corr = (fine - coarse) / (2.0 ** cfg.order - 1.0)
    return fine + corr, np.abs(corr)


def _fold_rho(shifted):
    shifted[0] = np.abs(shifted[0])
    return shifted


def _cyl_coords(point):
    if isinstance(point, FieldPoint):
        return point.rho, point.z, point.ct
    if isinstance(point, Mapping):
        return point["rho"], point["z"], point["ct"]
    return tuple(point)


def _cart_coords(point):
    if isinstance(point, FieldPoint):
        return point.rho, 0.0, point.z, point.ct
    if isinstance(point, Mapping):
        return point["x"], point.get("y", 0.0), point["z"], point["ct"]
    return tuple(point)


def _scalar(out):
    out = np.asarray(out)
    return complex(out) if out.ndim == 0 else out


def partial(field: Callable, point, axis: str | Mapping[str, int], n: int = 1,
            cfg: StencilConfig = DEFAULT_STENCIL):
    """Derivative of a cylindrical field along ``rho``, ``z`` or ``ct``.

    ``axis`` may also be a mapping such as ``{"z": 1, "ct": 1}`` for mixed
    derivatives, in which case ``n`` is ignored.

    Raises
    ------
    StencilError
        If any stencil node evaluates to a non-finite value.
    """
    return _scalar(partial_estimate(field, point, axis, n, cfg)[0])


def partial_estimate(field: Callable, point, axis, n: int = 1, cfg: StencilConfig = DEFAULT_STENCIL):
    """Like :func:`partial` but returns ``(value, error)``; error is None without Richardson."""
    orders = _orders(axis, n, CYL_AXES)
    val, err = _diff_estimate(field, _cyl_coords(point), orders, cfg, _fold_rho)
    return _scalar(val), err


def _orders(axis, n, names):
    req = dict(axis) if isinstance(axis, Mapping) else {axis: n}
    bad = set(req) - set(names)
    if bad:
        raise ValueError(f"unknown axes {sorted(bad)}; expected {names}")
    return tuple(int(req.get(a, 0)) for a in names)


def as_cartesian(field: Callable) -> Callable:
    """Wrap a cylindrical field as ``fn(x, y, z, ct)``."""
    def cart(x, y, z, ct):
        return field(np.hypot(x, y), z, ct)
    return cart


def cartesian_derivative(fn: Callable, point, orders: Mapping[str, int],
                         cfg: StencilConfig = DEFAULT_STENCIL):
    """Mixed derivative of a Cartesian ``fn(x, y, z, ct)``; vector outputs allowed."""
    return _diff(fn, _cart_coords(point), _orders(orders, 0, CART_AXES), cfg)


def gradient(field: Callable, point, cfg: StencilConfig = DEFAULT_STENCIL, cartesian: bool = False):
    """Cartesian gradient ``(d/dx, d/dy, d/dz)`` stacked on the last axis.

    ``field`` is cylindrical unless ``cartesian`` is set; ``point`` is a
    :class:`FieldPoint` (taken at ``y = 0``) or ``(x, y, z, ct)``.
    """
    fn = field if cartesian else as_cartesian(field)
    xyzt = _cart_coords(point)
    comps = [_diff(fn, xyzt, o, cfg) for o in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))]
    return np.stack(comps, axis=-1) if np.ndim(comps[0]) else np.array(comps)


@dataclass
class ResidualReport:
    """Per-point wave-operator residuals.

    ``relative = |residual| / normalization`` where the normalization is the
    largest magnitude among the terms of the operator at that point.
    """

    points: np.ndarray
    residual: np.ndarray
    normalization: np.ndarray
    rejected: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def relative(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.normalization > 0, self.residual / self.normalization, self.residual)

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative)) if self.relative.size else 0.0

    def passed(self, threshold: float = 1e-5) -> bool:
        return self.max_relative < threshold


def _reject(eval_fn, points, reject_singular):
    """Run ``eval_fn`` and drop singular points if allowed; return (result, kept points, rejected)."""
    try:
        return eval_fn(points), points, 0
    except StencilError as exc:
        if not reject_singular:
            raise
        bad = getattr(exc, "bad", None)
        if bad is None:
            raise
    # drop points whose footprints are singular, one pass per derivative is enough
    keep = np.ones(points.shape[0], dtype=bool)
    for _ in range(8):
        try:
            res = eval_fn(points[keep])
            break
        except StencilError as exc:
            idx = np.flatnonzero(keep)
            keep[idx[exc.bad]] = False
    else:
        raise SamplingError("could not isolate singular points")
    rejected = int((~keep).sum())
    if rejected > 0.1 * points.shape[0]:
        raise SamplingError(f"{rejected} of {points.shape[0]} points rejected as singular")
    return res, points[keep], rejected


def wave_residual(field: Callable, points, cfg: StencilConfig = DEFAULT_STENCIL,
                  reject_singular: bool = False, c: float = 1.0) -> ResidualReport:
    """Residual of ``f_rr + f_r/rho + f_zz - f_ctct`` at cylindrical ``points``.

    ``points`` is an ``(N, 3)`` array of ``(rho, z, ct)``.  Within
    ``1e-4`` of the axis the transverse part is replaced by ``2 f_rr``.
    The time coordinate is ``ct``, so ``c`` does not enter the operator.

    Raises
    ------
    SamplingError
        If ``reject_singular`` drops more than 10% of the points.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))

    def terms(p):
        co = (p[:, 0], p[:, 1], p[:, 2])
        f_rr = _diff(field, co, (2, 0, 0), cfg, _fold_rho)
        f_r = _diff(field, co, (1, 0, 0), cfg, _fold_rho)
        f_zz = _diff(field, co, (0, 2, 0), cfg, _fold_rho)
        f_tt = _diff(field, co, (0, 0, 2), cfg, _fold_rho)
        return f_rr, f_r, f_zz, f_tt

    (f_rr, f_r, f_zz, f_tt), kept, rejected = _reject(terms, pts, reject_singular)
    rho = kept[:, 0]
    on_axis = rho < AXIS_TOL * cfg.scale
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = np.where(on_axis, f_rr, f_r / np.where(on_axis, 1.0, rho))
    res = f_rr + radial + f_zz - f_tt
    norm = np.max(np.abs(np.stack([f_rr, radial, f_zz, f_tt])), axis=0)
    return ResidualReport(kept, np.abs(res), norm, rejected)
