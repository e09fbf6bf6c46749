"""Backend selection for the hot kernels.

The compiled extension is preferred; the NumPy fallback is used when the
extension is missing or ``SPARSETRACK_PURE_PYTHON`` is set to a non-empty
value other than ``0``.
"""
import importlib
import os

_BACKENDS = {"cython": "sparsetrack._ckernels", "python": "sparsetrack._pykernels"}


def load_backend(name):
    """Import a backend module by name (``"cython"`` or ``"python"``)."""
    return importlib.import_module(_BACKENDS[name])


def available_backends():
    names = []
    for name in _BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("SPARSETRACK_PURE_PYTHON", "0") not in ("", "0"):
        return load_backend("python")
    try:
        return load_backend("cython")
    except ImportError:
        return load_backend("python")


_impl = _select()

BACKEND = _impl.BACKEND
soft_threshold_vec = _impl.soft_threshold_vec
ist_steps = _impl.ist_steps
ist_solve = _impl.ist_solve
power_iteration = _impl.power_iteration
