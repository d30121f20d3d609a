"""Plant kernel selection: compiled extension if available, else pure Python.

Set KITBENCH_PURE=1 to force the Python fallback (used by the benchmark and
the kernel-parity tests).  Both implementations produce bit-identical
results; the compiled one is roughly an order of magnitude faster.
"""

import os

from . import reference

if os.environ.get("KITBENCH_PURE") == "1":
    _impl = reference
    IMPL = "python"
else:
    try:
        from . import _plant as _impl  # type: ignore[no-redef]

        IMPL = "compiled"
    except ImportError:
        _impl = reference
        IMPL = "python"

pd_force = _impl.pd_force
plant_step = _impl.plant_step
subgoal_cycle = _impl.subgoal_cycle

__all__ = ["IMPL", "pd_force", "plant_step", "subgoal_cycle", "reference"]
