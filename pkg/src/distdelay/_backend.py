"""Select the compiled kernels if available, else the pure-Python ones.

Set ``DISTDELAY_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("DISTDELAY_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

lindley = _impl.lindley
tail_counts = _impl.tail_counts
hyp1f1_series = _impl.hyp1f1_series
