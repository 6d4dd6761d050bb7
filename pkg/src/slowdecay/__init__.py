"""Closed-form wave pulses whose fields decay slower than 1/distance.

Evaluation of the pulse families, finite-difference certification against
the wave equation, asymptotic-limit diagnostics, energy norms and derived
electromagnetic and acoustic fields.
"""

from __future__ import annotations

from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .core import (
    Axis,
    FieldGrid,
    FieldPoint,
    GridError,
    PulseParams,
    RaySpec,
    evaluate_on_grid,
    make_grid,
)
from .kernels import BACKEND
from .pulses import (
    PULSE_NAMES,
    field,
    fractional_f,
    fwm_G,
    primitive_split,
    spectral_synthesize,
    splash_primitive,
    splash_psi,
    splash_split,
    unidirectional_primitive_U,
    unidirectional_u,
)

__all__ = [
    "__version__", "BACKEND", "Axis", "FieldGrid", "FieldPoint", "GridError", "PulseParams", "RaySpec",
    "evaluate_on_grid", "make_grid", "PULSE_NAMES", "field", "fractional_f", "fwm_G", "primitive_split",
    "spectral_synthesize", "splash_primitive", "splash_psi", "splash_split", "unidirectional_primitive_U",
    "unidirectional_u",
]
