"""Processing and proving of negated verification conditions that mix
floating-point and exact real arithmetic."""

from .errors import FpnvcError
from .fpformat import DOUBLE, SINGLE, FloatFormat, RoundMode
from .interval import Truth, eval_expr_interval, eval_formula_interval
from .ir import Interval, ProcessedNVC, VarSpec

__all__ = [
    "DOUBLE",
    "SINGLE",
    "FloatFormat",
    "FpnvcError",
    "Interval",
    "ProcessedNVC",
    "RoundMode",
    "Truth",
    "VarSpec",
    "eval_expr_interval",
    "eval_formula_interval",
]

__version__ = "0.1.0"
