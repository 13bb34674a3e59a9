"""Mean field game solvers for circadian oscillator synchronization and
jet-lag recovery on a periodic 1-D grid."""

from ._kernels import BACKEND as kernel_backend
from .ergodic import ErgodicSolution, solve_method1, solve_method2
from .grid import ModelParams, PeriodicGrid, REFERENCE_PARAMS, make_grid
from .mathieu import special_case_solution
from .metrics import RecoveryReport, circular_w2, order_parameter
from .mfg import MfgPath, solve_recovery_mfg
from .operators import Scheme
from .recovery import DensityPath, run_recovery

__version__ = "0.1.0"

__all__ = [
    "DensityPath",
    "ErgodicSolution",
    "MfgPath",
    "ModelParams",
    "PeriodicGrid",
    "REFERENCE_PARAMS",
    "RecoveryReport",
    "Scheme",
    "circular_w2",
    "kernel_backend",
    "make_grid",
    "order_parameter",
    "run_recovery",
    "solve_method1",
    "solve_method2",
    "solve_recovery_mfg",
    "special_case_solution",
]
