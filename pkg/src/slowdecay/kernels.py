"""Backend selection for the pulse kernels.

The compiled ``_ckernels`` module is used when it was built; otherwise, or
when ``SLOWDECAY_PURE_PYTHON`` is set to a non-empty value other than ``0``,
the numpy implementations in ``_pykernels`` are used.  Both expose the same
functions over flat float64 arrays.
"""

from __future__ import annotations

import os

from . import _pykernels

_force_py = os.environ.get("SLOWDECAY_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    backend = _pykernels
else:
    try:
        from . import _ckernels as backend  # type: ignore[no-redef]
    except ImportError:
        backend = _pykernels

BACKEND: str = backend.NAME
fallback = _pykernels

KERNEL_NAMES = ("psi", "psi_split", "Psi", "Psi_split", "aux_roots", "u", "U", "f", "G")


def get(name: str, use_fallback: bool = False):
    """Return kernel ``name`` from the active (or the numpy) backend."""
    if name not in KERNEL_NAMES:
        raise KeyError(f"unknown kernel {name!r}")
    return getattr(_pykernels if use_fallback else backend, name)
