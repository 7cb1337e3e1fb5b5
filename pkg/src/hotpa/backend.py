# backend.py
#
# Selects the kernel implementation for the propagation inner loops.
#
# Default is the numba backend; set HOTPA_NUMBA=0 (or "false"/"no") in
# the environment to force the pure-numpy fallback.  Both expose the
# same functions (see _kernels_numpy for the reference semantics);
# benchmarks/bench_kernels.py compares them.

import os

_flag = os.environ.get("HOTPA_NUMBA", "1").strip().lower()
WANT_NUMBA = _flag not in ("0", "false", "no", "off")

if WANT_NUMBA:
    try:
        from . import _kernels_numba as kernels
        BACKEND = "numba"
    except ImportError:
        from . import _kernels_numpy as kernels
        BACKEND = "numpy"
else:
    from . import _kernels_numpy as kernels
    BACKEND = "numpy"


def get_kernels(name: str | None = None):
    """Kernel module by name ("numba" | "numpy"); default = active backend."""
    if name is None:
        return kernels
    if name == "numpy":
        from . import _kernels_numpy
        return _kernels_numpy
    if name == "numba":
        from . import _kernels_numba
        return _kernels_numba
    raise ValueError(f"unknown backend {name!r}")
