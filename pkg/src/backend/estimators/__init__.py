"""
Naive and design-based frequentist estimators.
"""

from .frequentist import DesignError, design_mean, linearized_variance, naive_mean

__all__ = [
    'DesignError',
    'design_mean',
    'linearized_variance',
    'naive_mean',
]
