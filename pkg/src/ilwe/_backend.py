"""Select the kernel implementation at import time.

The compiled ``_kernels`` extension is used when it imports; setting
``ILWE_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _fallback

fallback = _fallback
compiled = None

if not os.environ.get("ILWE_PURE_PYTHON"):
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

impl = compiled if compiled is not None else fallback
NAME = impl.NAME
