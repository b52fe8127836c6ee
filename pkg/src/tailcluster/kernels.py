"""Backend selection for the hot kernels.

The compiled extension is preferred.  Setting ``TAILCLUSTER_PURE=1`` in the
environment, or a failed import, selects the numpy fallback.
"""
from __future__ import annotations

import os

if os.environ.get("TAILCLUSTER_PURE") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - exercised when the build is skipped
        from . import _kernels_py as _impl

BACKEND: str = _impl.BACKEND
path_stats = _impl.path_stats
dehaan_update = _impl.dehaan_update

__all__ = ["BACKEND", "path_stats", "dehaan_update"]
