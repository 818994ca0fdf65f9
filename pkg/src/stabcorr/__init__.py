"""Douglas-type splitting schemes with stabilizing corrections."""

from .core import (NORMS, AffineOperator, Layout, SplitSystem, StageSolveError, diagonal_system,
                   norm_l2_discrete, norm_max)
from .schemes import PRESETS, THETA_L, SchemeConfig, SchemeId, get_scheme, step
from .harness import BlowUpError, ConvergenceRecord, integrate

__all__ = [
    "NORMS", "AffineOperator", "Layout", "SplitSystem", "StageSolveError", "diagonal_system",
    "norm_l2_discrete", "norm_max", "PRESETS", "THETA_L", "SchemeConfig", "SchemeId", "get_scheme",
    "step", "BlowUpError", "ConvergenceRecord", "integrate",
]
__version__ = "0.1.0"
