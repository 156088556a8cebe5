"""Pick the compiled MMD core when it is importable.

Set ``EREMU_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
gaussian_mmd = _fallback.gaussian_mmd

if os.environ.get("EREMU_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        gaussian_mmd = _core.gaussian_mmd
