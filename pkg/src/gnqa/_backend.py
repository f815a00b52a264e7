"""Kernel selection.

The compiled extension is used when it imports cleanly; setting
``GNQA_PURE_PYTHON=1`` forces the numpy fallback. Both expose the same
functions, see :mod:`gnqa._fallback`.
"""

import os

from . import _fallback

NAME = "numpy"
kernels = _fallback

if os.environ.get("GNQA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        kernels = _compiled
        NAME = "cython"


def get(name):
    """Return the kernel module called ``name`` ("cython" or "numpy")."""
    if name == "numpy":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["numpy"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "cython")
    except ImportError:
        pass
    return names
