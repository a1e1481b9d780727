"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the
numpy fallback. Setting ``KFSD_PURE_PYTHON=1`` forces the fallback.

``kfsd_gaussian`` always runs on numpy: its cost is a dense quadratic form
that BLAS evaluates faster than the compiled loop (see
``benchmarks/bench_kernels.py``).
"""

import os

from . import _kernels_py

if os.environ.get("KFSD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

sq_dists = _impl.sq_dists
kfsd_gaussian = _kernels_py.kfsd_gaussian
band_counts = _impl.band_counts


def available_backends():
    """Mapping of backend name to kernel module, for tests and benchmarks."""
    backends = {"python": _kernels_py}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        backends["cython"] = _core
    return backends
