"""Boosting kernels with a compiled core and a pure-Python fallback.

The compiled extension is preferred when it imports cleanly; setting the
environment variable ``BLINDCITE_PURE_PYTHON=1`` forces the numpy fallback
(used by the backend benchmark and as a safety net on platforms without a
compiler). Both backends implement the identical selection contract.
"""

import os

from . import _ref

if os.environ.get("BLINDCITE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _ref
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _ref

BACKEND: str = _impl.BACKEND
scan_learners = _impl.scan_learners
squared_path = _impl.squared_path
