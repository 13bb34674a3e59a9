"""Kernel backend selection: compiled Cython core when available, NumPy
fallback otherwise. Set CIRCADIAN_MFG_PURE=1 to force the fallback."""

import os

from . import pure

if os.environ.get("CIRCADIAN_MFG_PURE"):
    impl = pure
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pure

BACKEND = impl.BACKEND

STATUS_CONVERGED = pure.STATUS_CONVERGED
STATUS_MAX_ITER = pure.STATUS_MAX_ITER
STATUS_CFL_VIOLATION = pure.STATUS_CFL_VIOLATION

apply_operator = impl.apply_operator
apply_transpose = impl.apply_transpose
extract_control = impl.extract_control
circular_w2_sq = impl.circular_w2_sq
method2_run = impl.method2_run
fp_run = impl.fp_run
mfg_backward = impl.mfg_backward
mfg_forward = impl.mfg_forward
