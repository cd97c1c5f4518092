"""Hot geometry kernels with backend selection at import.

The compiled extension is preferred; when it is unavailable (no compiler
at install time) the numpy fallback takes over with identical results.
``BACKEND`` names the active implementation; both are importable directly
for benchmarking and cross-checking.
"""
from . import pure

try:
    from . import _native as _impl

    BACKEND = "native"
except ImportError:  # pragma: no cover - depends on build environment
    _impl = pure
    BACKEND = "pure"

closest_squared_distances = _impl.closest_squared_distances
raycast = _impl.raycast

__all__ = ["BACKEND", "closest_squared_distances", "raycast", "pure"]
