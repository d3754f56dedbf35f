"""
Sensitivity analyses for unmeasured effect modification.
"""

from .lp_bounds import LPBound, SensitivityError, lp_bound_greedy, lp_bound_oracle
from .curves import SensitivityCurve, first_crossing
from .confounder import ConfounderSpec, clip_h, pate_confounder_curve
from .distribution_shift import ShiftSpec, SourceEffects, load_source_effects, pate_shift_bounds

__all__ = [
    'LPBound',
    'SensitivityError',
    'lp_bound_greedy',
    'lp_bound_oracle',
    'SensitivityCurve',
    'first_crossing',
    'ConfounderSpec',
    'clip_h',
    'pate_confounder_curve',
    'ShiftSpec',
    'SourceEffects',
    'load_source_effects',
    'pate_shift_bounds',
]
