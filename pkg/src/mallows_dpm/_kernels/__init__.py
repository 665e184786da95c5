"""Kernel backend selection.

The compiled extension is preferred when present; MALLOWS_DPM_KERNELS
forces a choice ("c", "py", or "auto").  Both backends are integer-exact,
so the selection never changes sampler output, only speed.
"""

import os

_choice = os.environ.get("MALLOWS_DPM_KERNELS", "auto").lower()
if _choice not in ("auto", "c", "py"):
    raise ValueError(f"MALLOWS_DPM_KERNELS must be auto, c, or py (got {_choice!r})")

if _choice == "py":
    from . import _pure as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise
        from . import _pure as _impl

        BACKEND = "python"

s_code = _impl.s_code
s_codes = _impl.s_codes
build_from_code = _impl.build_from_code

__all__ = ["BACKEND", "s_code", "s_codes", "build_from_code"]
