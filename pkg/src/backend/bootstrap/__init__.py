"""
Cluster-scaled Bayesian bootstrap: weight draws and PATE / mean posteriors.
"""

from .dirichlet import (
    BootstrapError,
    draw_cluster_weight_matrix,
    draw_dirichlet_flat,
    draw_dirichlet_matrix,
    draw_scaled_cluster_weights,
)
from .pate import (
    cluster_fractions,
    cluster_means,
    estimate_mean,
    estimate_outcome_table,
    estimate_pate,
    pate_draws_from_weights,
    segment_shares,
    source_average,
)

__all__ = [
    'BootstrapError',
    'draw_cluster_weight_matrix',
    'draw_dirichlet_flat',
    'draw_dirichlet_matrix',
    'draw_scaled_cluster_weights',
    'cluster_fractions',
    'cluster_means',
    'estimate_mean',
    'estimate_outcome_table',
    'estimate_pate',
    'pate_draws_from_weights',
    'segment_shares',
    'source_average',
]
