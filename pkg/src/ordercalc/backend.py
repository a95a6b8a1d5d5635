"""Summation backend selection.

The compiled extension is preferred when importable; the numpy fallback is
used otherwise.  ``ORDERCALC_BACKEND=numpy`` (or ``compiled``) overrides.
"""

from __future__ import annotations

import os

from . import _kernels_fallback

_requested = os.environ.get("ORDERCALC_BACKEND", "auto").strip().lower()

if _requested in ("auto", "", "compiled"):
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "ORDERCALC_BACKEND=compiled but the ordercalc._kernels "
                "extension is not built"
            ) from None
        kernels = _kernels_fallback
elif _requested in ("numpy", "fallback", "python"):
    kernels = _kernels_fallback
else:
    raise ValueError(f"unknown ORDERCALC_BACKEND value {_requested!r}")

BACKEND_NAME: str = kernels.NAME


def available_backends() -> dict[str, object]:
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    out = {"numpy": _kernels_fallback}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
