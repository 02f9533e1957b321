"""Kernel backend selection: compiled extension when built, else pure Python.

``DIAGFD_BACKEND=python`` forces the fallback; ``DIAGFD_BACKEND=cython``
insists on the extension and fails loudly when it is missing.
"""

from __future__ import annotations

import os

from . import _kernel_py


def _select():
    requested = os.environ.get("DIAGFD_BACKEND", "").strip().lower()
    if requested == "python":
        return _kernel_py
    try:
        from . import _kernel_c  # type: ignore[attr-defined]
    except ImportError:
        if requested == "cython":
            raise ImportError(
                "DIAGFD_BACKEND=cython but the compiled kernel is not built; "
                "reinstall the package with Cython and a C compiler available"
            ) from None
        return _kernel_py
    return _kernel_c


active_kernel = _select()
BACKEND_NAME: str = active_kernel.BACKEND_NAME


def available_kernels() -> dict[str, object]:
    """All importable kernel modules, keyed by backend name."""
    kernels: dict[str, object] = {_kernel_py.BACKEND_NAME: _kernel_py}
    try:
        from . import _kernel_c  # type: ignore[attr-defined]

        kernels[_kernel_c.BACKEND_NAME] = _kernel_c
    except ImportError:
        pass
    return kernels
