"""Compute kernel backend selection.

The compiled Cython extension is preferred when it importable; the numpy
implementation is the fallback. Set FLIQC_BACKEND=pure or =compiled to force
a choice (forcing `compiled` raises if the extension was not built).
"""

import os

from . import pure
from .pure import STATUS_INFEASIBLE, STATUS_MAX_ITER, STATUS_OPTIMAL

_choice = os.environ.get("FLIQC_BACKEND", "").strip().lower()
if _choice == "pure":
    _impl = pure
elif _choice == "compiled":
    from . import core as _impl
elif _choice == "":
    try:
        from . import core as _impl
    except ImportError:
        _impl = pure
else:
    raise ValueError(f"FLIQC_BACKEND must be 'pure' or 'compiled', got {_choice!r}")

qp_solve = _impl.qp_solve
segment_sphere_batch = _impl.segment_sphere_batch
BACKEND = _impl.BACKEND

__all__ = [
    "BACKEND",
    "STATUS_INFEASIBLE",
    "STATUS_MAX_ITER",
    "STATUS_OPTIMAL",
    "pure",
    "qp_solve",
    "segment_sphere_batch",
]
