"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``BPS_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("BPS_PURE_PYTHON", "") not in ("", "0"):
    from bps import _pykernels as kernels
else:
    try:
        from bps import _kernels as kernels
    except ImportError:  # extension not built
        from bps import _pykernels as kernels

from bps import _pykernels as pure

BACKEND = "cython" if kernels is not pure else "python"

__all__ = ["kernels", "pure", "BACKEND"]
