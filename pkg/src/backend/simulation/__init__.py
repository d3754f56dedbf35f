"""
PPS two-stage sampling and the replication harness.
"""

from .pps_sampling import (
    SamplingError,
    SimulationDesign,
    design_from_population,
    draw_pps_two_stage,
    select_clusters_pps,
)
from .replication import MetricsTable, SimulationError, replicate_metrics, run_replication_study

__all__ = [
    'SamplingError',
    'SimulationDesign',
    'design_from_population',
    'draw_pps_two_stage',
    'select_clusters_pps',
    'MetricsTable',
    'SimulationError',
    'replicate_metrics',
    'run_replication_study',
]
