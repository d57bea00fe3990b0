"""Backend selection for the reservoir hot loop.

The compiled extension is used when it imports; otherwise (or when the
``ORTHO_ESN_PURE_PYTHON`` environment variable is set to a non-empty value
other than ``0``) the numpy implementation is used. ``BACKEND`` names the
active choice.
"""

import os

from . import _pykernels

__all__ = ["BACKEND", "drive_states", "available_backends", "get_backend"]


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()
_force_pure = os.environ.get("ORTHO_ESN_PURE_PYTHON", "") not in ("", "0")

if _compiled is not None and not _force_pure:
    BACKEND = "cython"
    drive_states = _compiled.drive_states
else:
    BACKEND = "python"
    drive_states = _pykernels.drive_states


def available_backends():
    """Names of the backends importable in this environment."""
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get_backend(name):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
