"""
Overlap diagnostics: membership model, selection scores and support policies.
"""

from .membership_model import (
    ConvergenceError,
    MembershipFit,
    OverlapError,
    SeparationError,
    fit_membership_model,
    membership_from_probabilities,
)
from .selection_score import (
    SelectionScores,
    SupportFlags,
    flag_low_support,
    selection_score,
    standardize_scores,
    write_scores_csv,
)
from .support_policy import SupportPolicy, pate_with_support_policy, support_report

__all__ = [
    'ConvergenceError',
    'MembershipFit',
    'OverlapError',
    'SeparationError',
    'fit_membership_model',
    'membership_from_probabilities',
    'SelectionScores',
    'SupportFlags',
    'flag_low_support',
    'selection_score',
    'standardize_scores',
    'write_scores_csv',
    'SupportPolicy',
    'pate_with_support_policy',
    'support_report',
]
