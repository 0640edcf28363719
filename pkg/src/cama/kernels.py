"""Backend selection for the per-cycle match/route kernel.

The compiled extension is used when it imports; otherwise, or when
``CAMA_PURE_PYTHON=1`` is set, the pure-Python implementation is used.
``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("CAMA_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend requested")
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def run_cycles(tables: dict, data, pipelined: bool, backend: str | None = None):
    """Execute the cycle loop over flattened placement tables.

    Returns ``(report_cycles, report_states, enabled[c,t,2], matches[c,t],
    rows[c,t,2], sends[c,t], reports[c])``.  CAMA-E runs one cycle per
    symbol; CAMA-T runs one extra drain cycle, and its reports carry the
    index of the symbol that produced them.
    """
    backend = backend or BACKEND
    impl = {"python": _kernels_py, "cython": _compiled}.get(backend)
    if impl is None:
        raise ValueError(f"kernel backend {backend!r} is not available")
    data = np.ascontiguousarray(data, dtype=np.int64)
    t = tables
    return impl.run_cycles(
        data, t["enc"], t["col_code"], t["st_ptr"], t["st_cols"], t["invert"], t["report"],
        t["start_data"], t["start_all"], t["succ_ptr"], t["succ_idx"], t["st_tile"], t["en_w"],
        t["st_unit"], t["row_w"], t["send"], t["placed_en"], t["n_tiles"], bool(pipelined),
    )
