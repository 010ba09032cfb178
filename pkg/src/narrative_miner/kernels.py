"""Kernel dispatch: compiled extension when importable, pure Python otherwise.

Set ``NARRATIVE_MINER_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("NARRATIVE_MINER_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if _active is compiled_backend else "python"

ks_scan = _active.ks_scan
louvain_local_moves = _active.louvain_local_moves
hurwitz = _active.hurwitz
