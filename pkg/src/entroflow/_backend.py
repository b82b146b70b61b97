"""Kernel backend selection.

The compiled module ``_ckernels`` is used when it is importable; otherwise
the NumPy module ``_pykernels`` is used.  Setting ``ENTROFLOW_BACKEND=python``
forces the fallback.
"""

import importlib
import os

_MODULES = {"cython": "entroflow._ckernels", "python": "entroflow._pykernels"}


def load(name):
    """Import and return the kernel module called ``name``."""
    return importlib.import_module(_MODULES[name])


def available():
    """Names of the kernel backends importable in this environment."""
    names = []
    for name in _MODULES:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    forced = os.environ.get("ENTROFLOW_BACKEND", "").strip().lower()
    if forced:
        if forced not in _MODULES:
            raise ImportError(f"ENTROFLOW_BACKEND={forced!r}; expected one of {sorted(_MODULES)}")
        return load(forced)
    try:
        return load("cython")
    except ImportError:
        return load("python")


kernels = _select()
BACKEND = kernels.NAME
