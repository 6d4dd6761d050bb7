"""The compiled and numpy kernels must agree everywhere."""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from slowdecay import _pykernels, kernels

compiled_only = pytest.mark.skipif(kernels.BACKEND == "numpy", reason="compiled kernels not built")

CALLS = {
    "psi": lambda k, a: k.psi(*a, 0.3),
    "psi_split": lambda k, a: k.psi_split(*a, 0.3),
    "Psi": lambda k, a: k.Psi(*a, 0.3, 1.0),
    "Psi_split": lambda k, a: k.Psi_split(*a, 0.3, 2.0),
    "aux_roots": lambda k, a: k.aux_roots(*a, 0.3, 0.1),
    "u": lambda k, a: k.u(*a, 0.3, 0.1),
    "U": lambda k, a: k.U(*a, 0.3, 0.1, 1.0),
    "f": lambda k, a: k.f(*a, 1.0, 2.0, -0.25),
    "G": lambda k, a: k.G(*a, 1.0, 1.5),
}


def _points(n=4000, seed=3, scale=1.0):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.0, 8.0, n) * scale
    rho[:20] = 0.0
    z = rng.uniform(-8.0, 8.0, n) * scale
    ct = rng.uniform(-8.0, 8.0, n) * scale
    return rho, z, ct


def _rel(a, b, cond=1.0):
    a, b = np.asarray(a), np.asarray(b)
    scale = np.maximum(np.abs(a), np.abs(b)) * cond
    # subnormal results carry no relative precision; compare them absolutely
    tiny = np.finfo(float).tiny
    ok = np.isfinite(a) & np.isfinite(b)
    return np.max(np.abs(a - b)[ok] / np.maximum(scale[ok], tiny))


def _g_phase(rho, z, ct, a1=1.0, k=1.5):
    # G carries exp(i*phase); rounding one ulp of phase shifts G by |phase| * eps
    tau = z - ct
    return np.maximum(1.0, np.abs(k * rho**2 * tau / (a1**2 + tau**2)) + np.abs(k * (z + ct)))


def test_kernel_names_complete():
    for name in kernels.KERNEL_NAMES:
        assert callable(kernels.get(name))
        assert callable(kernels.get(name, use_fallback=True))
    with pytest.raises(KeyError):
        kernels.get("nope")


@compiled_only
@pytest.mark.parametrize("name", list(CALLS))
@pytest.mark.parametrize("scale", [1.0, 1e3])
def test_backends_agree(name, scale):
    args = _points(scale=scale)
    a = CALLS[name](_pykernels, args)
    b = CALLS[name](kernels.backend, args)
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    cond = _g_phase(*args) if name == "G" else 1.0
    for x, y in zip(a, b):
        # U at large arguments involves cancelling logarithms; both backends share the algorithm
        assert _rel(x, y, cond) < (1e-9 if name == "U" else 1e-12)


def test_env_forces_fallback():
    env = dict(os.environ, SLOWDECAY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from slowdecay import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
