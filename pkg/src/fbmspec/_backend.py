"""Select the compiled core when present, else the NumPy fallback.

Set ``FBMSPEC_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

_impl = _fallback
COMPILED = False
if os.environ.get("FBMSPEC_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        COMPILED = True
    except ImportError:
        _impl = _fallback

kappa_pairs = _impl.kappa_pairs
kappa_matrix = _impl.kappa_matrix
jacobi_eigh = _impl.jacobi_eigh

__all__ = ["COMPILED", "kappa_pairs", "kappa_matrix", "jacobi_eigh"]
