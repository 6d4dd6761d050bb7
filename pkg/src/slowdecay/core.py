"""Parameter, coordinate and grid types shared by every module.

Natural units: lengths and times share one unit and ``c`` defaults to 1, so
``ct`` and ``cts = c*t_s`` are lengths.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

Field = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

AXIS_NAMES = ("x", "y", "rho", "z", "ct")
THREADS_ENV = "SLOWDECAY_THREADS"


class GridError(ValueError):
    """Invalid grid axis specification or missing coordinates."""


@dataclass(frozen=True)
class PulseParams:
    """Physical constants and pulse-shape parameters.

    Parameters
    ----------
    c : float
        Wave speed.
    t_s : float
        Temporal width (time); only ``c*t_s`` enters the pulses.
    z_s : float
        Axial width of the unidirectional pulse (length, >= 0).
    a1, a2 : float
        Width and spectral-decay lengths of the fractional splash pulse.
    nu : float
        Spectral power; the pulse denominator carries the power ``nu + 1``.
    """

    c: float = 1.0
    t_s: float = 1.0
    z_s: float = 0.0
    a1: float = 1.0
    a2: float = 2.0
    nu: float = -0.25

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.c * self.t_s > 0:
            raise ValueError(f"c*t_s must be positive, got {self.c * self.t_s}")
        if not self.z_s >= 0:
            raise ValueError(f"z_s must be non-negative, got {self.z_s}")
        if not (self.a1 > 0 and self.a2 > 0):
            raise ValueError(f"a1 and a2 must be positive, got {self.a1}, {self.a2}")
        if not self.nu > -1:
            raise ValueError(f"nu must exceed -1, got {self.nu}")

    @property
    def cts(self) -> float:
        return self.c * self.t_s

    @property
    def square_integrable(self) -> bool:
        return self.nu > -0.5

    def with_(self, **changes) -> "PulseParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class FieldPoint:
    """A spacetime point in cylindrical coordinates (``ct`` is a length)."""

    rho: float
    z: float
    ct: float

    def __post_init__(self) -> None:
        if self.rho < 0:
            raise ValueError(f"rho must be non-negative, got {self.rho}")

    @property
    def R(self) -> float:
        return math.hypot(self.rho, self.z)

    @classmethod
    def from_cartesian(cls, x: float, y: float, z: float, ct: float) -> "FieldPoint":
        return cls(math.hypot(x, y), z, ct)

    def evaluate(self, fn: Field) -> complex:
        return complex(np.asarray(fn(np.array(self.rho), np.array(self.z), np.array(self.ct))))


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self) -> None:
        if self.name not in AXIS_NAMES:
            raise GridError(f"unknown axis {self.name!r}; expected one of {AXIS_NAMES}")
        if self.n < 2:
            raise GridError(f"axis {self.name!r} needs at least 2 samples, got {self.n}")
        if not self.lo < self.hi:
            raise GridError(f"axis {self.name!r} needs min < max, got [{self.lo}, {self.hi}]")
        if self.name == "rho" and self.lo < 0:
            raise GridError("rho axis must be non-negative")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class FieldGrid:
    """Axis specification plus (once filled) row-major complex samples.

    ``values`` has shape ``tuple(ax.n for ax in axes)``; non-finite samples
    are stored as NaN and counted in ``nonfinite``.
    """

    axes: tuple[Axis, ...]
    values: np.ndarray | None = None
    fixed: Mapping[str, float] = field(default_factory=dict)
    pulse: str = ""
    nonfinite: int = 0

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def axis_order(self) -> tuple[str, ...]:
        return tuple(ax.name for ax in self.axes)

    def coordinates(self) -> dict[str, np.ndarray]:
        mesh = np.meshgrid(*(ax.values for ax in self.axes), indexing="ij")
        return {ax.name: m for ax, m in zip(self.axes, mesh)}


def make_grid(axes: Mapping[str, Sequence[float]] | Sequence[Axis]) -> FieldGrid:
    """Build an empty grid.

    ``axes`` is either a sequence of :class:`Axis` or a mapping
    ``name -> (min, max, n)``; its order fixes the row-major layout.
    """
    if isinstance(axes, Mapping):
        built = tuple(Axis(name, float(lo), float(hi), int(n)) for name, (lo, hi, n) in axes.items())
    else:
        built = tuple(axes)
    if not built:
        raise GridError("a grid needs at least one axis")
    names = [ax.name for ax in built]
    if len(set(names)) != len(names):
        raise GridError(f"duplicate axes in {names}")
    if "rho" in names and ({"x", "y"} & set(names)):
        raise GridError("use either rho or x/y, not both")
    return FieldGrid(axes=built)


def _cylindrical(coords: Mapping[str, np.ndarray | float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if "rho" in coords:
        rho = np.asarray(coords["rho"], dtype=float)
    elif "x" in coords or "y" in coords:
        rho = np.hypot(np.asarray(coords.get("x", 0.0), float), np.asarray(coords.get("y", 0.0), float))
    else:
        raise GridError("no transverse coordinate given (rho, or x/y)")
    for key in ("z", "ct"):
        if key not in coords:
            raise GridError(f"coordinate {key!r} neither on the grid nor fixed")
    z = np.asarray(coords["z"], dtype=float)
    ct = np.asarray(coords["ct"], dtype=float)
    return np.broadcast_arrays(rho, z, ct)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def evaluate_on_grid(
    pulse: str | Field,
    params: PulseParams,
    grid: FieldGrid,
    fixed: Mapping[str, float] | None = None,
    threads: int | None = None,
    **pulse_kw,
) -> FieldGrid:
    """Fill ``grid`` with samples of a pulse.

    ``pulse`` is a name understood by :func:`slowdecay.pulses.field` or a
    callable ``fn(rho, z, ct)``.  ``fixed`` supplies every coordinate the
    grid does not vary.  Cells are independent, so the result is the same
    for any thread count.
    """
    from . import pulses

    fixed = dict(fixed or {})
    clash = set(fixed) & set(grid.axis_order)
    if clash:
        raise GridError(f"coordinates {sorted(clash)} are both fixed and varied")
    if isinstance(pulse, str):
        fn = pulses.field(pulse, params, **pulse_kw)
        name = pulse
    else:
        fn = pulse
        name = getattr(pulse, "__name__", "custom")

    coords: dict[str, np.ndarray | float] = dict(fixed)
    coords.update(grid.coordinates())
    rho, z, ct = (np.ascontiguousarray(a, dtype=float).ravel() for a in _cylindrical(coords))

    nthreads = resolve_threads(threads)
    if nthreads == 1 or rho.size < 2 * nthreads:
        flat = np.asarray(fn(rho, z, ct), dtype=complex)
    else:
        bounds = np.linspace(0, rho.size, nthreads + 1).astype(int)
        chunks = list(zip(bounds[:-1], bounds[1:]))
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            parts = list(pool.map(lambda ab: np.asarray(fn(rho[ab[0]:ab[1]], z[ab[0]:ab[1]], ct[ab[0]:ab[1]]), complex), chunks))
        flat = np.concatenate(parts)

    bad = ~np.isfinite(flat)
    flat = np.where(bad, complex(np.nan, np.nan), flat)
    return replace(
        grid,
        values=flat.reshape(grid.shape),
        fixed=fixed,
        pulse=name,
        nonfinite=int(bad.sum()),
    )


RAY_KINDS = ("forward-z", "backward-z", "radial", "oblique", "diagonal")


@dataclass(frozen=True)
class RaySpec:
    """A t -> infinity path riding on (or near) the pulse peak.

    ``ct`` runs over ``ct0 * 2**j`` for ``j = 0..doublings``.  ``rho0`` is the
    fixed transverse coordinate of the axial rays and ``z0`` the fixed axial
    coordinate of the radial ray.
    """

    kind: str
    delta: float = 0.0
    alpha: float = 0.0
    ct0: float = 10.0
    doublings: int = 20
    rho0: float = 0.0
    z0: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in RAY_KINDS:
            raise ValueError(f"unknown ray kind {self.kind!r}; expected one of {RAY_KINDS}")
        if not self.ct0 > 0:
            raise ValueError("ct0 must be positive")
        if 2.0 ** self.doublings < 100.0:
            raise ValueError("the ct sequence must span at least two decades")
        if self.kind == "oblique" and not 0 < self.alpha < math.pi:
            raise ValueError("oblique rays need 0 < alpha < pi")

    @property
    def ct_sequence(self) -> np.ndarray:
        return self.ct0 * 2.0 ** np.arange(self.doublings + 1)

    def coordinates(self, ct: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(rho, z)`` on the ray at times ``ct``; ``rho`` may be signed for diagnostics."""
        ct = np.asarray(ct, dtype=float)
        d = self.delta
        if self.kind == "forward-z":
            return np.full_like(ct, self.rho0), ct + d
        if self.kind == "backward-z":
            return np.full_like(ct, self.rho0), -(ct + d)
        if self.kind == "radial":
            return ct + d, np.full_like(ct, self.z0)
        if self.kind == "oblique":
            return ct * math.sin(self.alpha) + d, ct * math.cos(self.alpha) + d
        return ct + d, ct + d
