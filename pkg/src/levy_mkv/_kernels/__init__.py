"""Kernel backend selection: compiled extension when available, pure python
otherwise.  Set LEVY_MKV_PURE_PYTHON=1 to force the fallback."""

from __future__ import annotations

import os

from . import purepy

if os.environ.get("LEVY_MKV_PURE_PYTHON") == "1":
    _impl = purepy
    BACKEND = "purepy"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = purepy
        BACKEND = "purepy"

STATUS_OK = purepy.STATUS_OK
STATUS_BLOWUP = purepy.STATUS_BLOWUP
STATUS_THINNING = purepy.STATUS_THINNING
MUTATION_NONE = purepy.MUTATION_NONE
MUTATION_SKIP_MINUS = purepy.MUTATION_SKIP_MINUS

ensemble_run = _impl.ensemble_run
pair_run = _impl.pair_run
systems_run = _impl.systems_run


def backends():
    """Mapping of available backend name -> module (for the benchmark)."""
    out = {"purepy": purepy}
    try:
        from . import _core
        out["compiled"] = _core
    except ImportError:
        pass
    return out
