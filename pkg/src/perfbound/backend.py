"""Kernel backend selection: compiled extension if built, pure Python otherwise.

Set PERFBOUND_BACKEND=python to force the fallback (used to exercise the
pure path end to end); any other value, or an unbuilt extension, resolves
normally.
"""

import os

if os.environ.get("PERFBOUND_BACKEND") == "python":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

COMPILED: bool = _impl.COMPILED
simulate_batch = _impl.simulate_batch
minimax_optimize = _impl.minimax_optimize


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
