"""Kernel dispatch: compiled core when importable, numpy fallback otherwise."""
import os

from . import _fallback

try:
    if os.environ.get("VALSIZE_PURE") == "1":
        raise ImportError("compiled core disabled by VALSIZE_PURE")
    from . import _core as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

confusion_sums = _impl.confusion_sums
fisher_sums = _impl.fisher_sums
loo_km_survival = _impl.loo_km_survival
