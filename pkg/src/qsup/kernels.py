"""Backend selection for the hot interference-map kernel.

The compiled Cython extension is used when importable; otherwise, or when the
environment variable ``QSUP_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy fallback is used.
"""

import os

from . import _kernels_py

_force_py = os.environ.get("QSUP_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure python requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        name = BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return _compiled
    if name == "python":
        return _kernels_py
    raise ValueError(f"unknown kernel backend {name!r}")


def interference_map(*args, backend=None):
    return get_backend(backend).interference_map(*args)
