"""Backend selection for the hot kernels.

The compiled core is used when importable; set ``SQUEEZE_SIM_PURE_PYTHON=1``
to force the pure-Python fallback. Callers must look kernels up through this
module at call time so that :func:`use_backend` takes effect.
"""

import os

from . import _core_py

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKEND = "python"
face_coefficients = _core_py.face_coefficients
flux_apply = _core_py.flux_apply
flux_solve = _core_py.flux_solve
rotate = _core_py.rotate


def available_backends():
    return ["cython", "python"] if _compiled is not None else ["python"]


def use_backend(name):
    """Switch kernels to ``"cython"`` or ``"python"``."""
    global BACKEND, face_coefficients, flux_apply, flux_solve, rotate
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled core is not built")
        mod = _compiled
    elif name == "python":
        mod = _core_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    face_coefficients = mod.face_coefficients
    flux_apply = mod.flux_apply
    flux_solve = mod.flux_solve
    rotate = mod.rotate


if _compiled is not None and os.environ.get("SQUEEZE_SIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    use_backend("cython")
