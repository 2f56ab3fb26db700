"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``FREEBOUND_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("FREEBOUND_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
    NAME = "python"
else:
    try:
        from . import _kernels as kernels
        NAME = "cython"
    except ImportError:  # extension not built
        kernels = _kernels_py
        NAME = "python"
