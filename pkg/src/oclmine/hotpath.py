"""Import-time selection of the hot-kernel implementation.

Prefers the compiled extension and falls back to the numpy kernels when
it is not built.  ``OCLMINE_KERNEL_IMPL=py`` or ``=cy`` forces one side,
which the comparison benchmark and the parity tests use.
"""

from __future__ import annotations

import os

_forced = os.environ.get("OCLMINE_KERNEL_IMPL", "").lower()

if _forced in ("py", "numpy"):
    from . import _kernels_py as _impl

    KERNEL_IMPL = "numpy"
elif _forced in ("cy", "cython"):
    from . import _kernels as _impl  # type: ignore[no-redef]

    KERNEL_IMPL = "cython"
elif _forced:
    raise RuntimeError(f"OCLMINE_KERNEL_IMPL must be 'py' or 'cy', got {_forced!r}")
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        KERNEL_IMPL = "cython"
    except ImportError:
        from . import _kernels_py as _impl  # type: ignore[no-redef]

        KERNEL_IMPL = "numpy"

region_scan = _impl.region_scan
region_scan_multi = _impl.region_scan_multi
kmeans_assign = _impl.kmeans_assign
