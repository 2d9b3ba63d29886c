"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise the numpy
fallback. Set ``MATCHMARKET_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

kernels = _pykernels
if os.environ.get("MATCHMARKET_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:  # not built
        kernels = _pykernels

BACKEND = kernels.BACKEND


def compiled_available():
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True


def get_kernels(name=None):
    """Return a kernel module by name (``"python"``/``"cython"``) or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
