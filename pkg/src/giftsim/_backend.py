"""Selection of the step-loop kernel: compiled extension if built, else pure Python.

Both kernels produce bit-identical traces; the compiled one is just faster.
"""

from __future__ import annotations

from typing import Callable

from . import _kernel_py

try:
    from . import _speedups
except ImportError:  # extension not built; pure Python still fully functional
    _speedups = None

DEFAULT_BACKEND = "compiled" if _speedups is not None else "python"


def available_backends() -> tuple[str, ...]:
    if _speedups is not None:
        return ("compiled", "python")
    return ("python",)


def kernel_for(backend: str | None = None) -> Callable:
    """The ``run_plan`` callable for a backend name (None picks the default)."""
    if backend is None:
        backend = DEFAULT_BACKEND
    if backend == "python":
        return _kernel_py.run_plan
    if backend == "compiled":
        if _speedups is None:
            raise ValueError("compiled kernel requested but the extension is not built")
        return _speedups.run_plan
    raise ValueError(f"unknown backend {backend!r}; expected one of {available_backends()}")
