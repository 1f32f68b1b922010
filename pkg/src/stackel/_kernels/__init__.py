"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``STACKEL_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy implementation is used.
"""

import os

from . import _pykernels

_force_py = os.environ.get("STACKEL_PURE_PYTHON", "") not in ("", "0")

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKEND = "cython" if _ckernels is not None and not _force_py else "python"
_impl = _ckernels if BACKEND == "cython" else _pykernels


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ("cython", "python" or None for the active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["cython", "python"] if _ckernels is not None else ["python"]


def eval_program(*args):
    return _impl.eval_program(*args)


def rk4(*args):
    return _impl.rk4(*args)
