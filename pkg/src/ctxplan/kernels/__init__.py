"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The compiled extension (``_native``, built from Cython) is preferred; when it
is missing the numpy-based reference in ``pyref`` takes over transparently.
Set ``CTXPLAN_KERNELS=python`` or ``CTXPLAN_KERNELS=native`` to force one
backend (forcing ``native`` raises if the extension is not built).

``benchmarks/bench_kernels.py`` compares the two backends head to head.
"""

from __future__ import annotations

import os

_requested = os.environ.get("CTXPLAN_KERNELS", "").strip().lower()
if _requested not in ("", "native", "python"):
    raise ImportError(
        f"CTXPLAN_KERNELS must be 'native' or 'python', got {_requested!r}"
    )

_impl = None
if _requested != "python":
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "native":
            raise ImportError(
                "CTXPLAN_KERNELS=native requested but the compiled kernel "
                "extension is not built; reinstall with "
                "'pip install -e . --no-build-isolation'"
            )
if _impl is None:
    from . import pyref as _impl

BACKEND = "native" if _impl.__name__.endswith("_native") else "python"

point_in_rects = _impl.point_in_rects
segment_collides = _impl.segment_collides
first_hit_param = _impl.first_hit_param
drift_at = _impl.drift_at
nearest_index = _impl.nearest_index
occupancy = _impl.occupancy
best_extension = _impl.best_extension
cost_terms = _impl.cost_terms

__all__ = [
    "BACKEND",
    "best_extension",
    "cost_terms",
    "drift_at",
    "first_hit_param",
    "nearest_index",
    "occupancy",
    "point_in_rects",
    "segment_collides",
]
