"""Select the compiled kernels when available, else the numpy fallback.

Set ``QUDITRC_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("QUDITRC_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

if _compiled is not None:
    NAME = "compiled"
    evolve_qudit = _compiled.evolve_qudit
    evolve_duffing = _compiled.evolve_duffing
else:
    NAME = "python"
    evolve_qudit = _fallback.evolve_qudit
    evolve_duffing = _fallback.evolve_duffing

IMPLEMENTATIONS = {"python": (_fallback.evolve_qudit, _fallback.evolve_duffing)}
if _compiled is not None:
    IMPLEMENTATIONS["compiled"] = (_compiled.evolve_qudit, _compiled.evolve_duffing)
