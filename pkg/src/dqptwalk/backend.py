"""Kernel backend selection.

Prefers the compiled extension; falls back to the numpy twin when the
extension was not built. Set DQPTWALK_PURE=1 to force the fallback.
"""
import os

if os.environ.get("DQPTWALK_PURE"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

walk_step = _impl.walk_step
phase_increments = _impl.phase_increments
two_mode_table = _impl.two_mode_table
