"""
Typed records for survey samples, posterior draws and estimates.
"""

from .survey import (
    Population,
    SchemaError,
    SurveyDataset,
    SurveySchema,
    SurveyValidationError,
    ValidationReport,
    validate_survey,
)
from .draws import AlignmentError, CateDraws, DrawsValidationError
from .summaries import PointEstimate, PosteriorSummary, equal_tailed_interval
from .weights import AtomKind, BBWeightDraw, ScaledWeightMode

__all__ = [
    'Population',
    'SchemaError',
    'SurveyDataset',
    'SurveySchema',
    'SurveyValidationError',
    'ValidationReport',
    'validate_survey',
    'AlignmentError',
    'CateDraws',
    'DrawsValidationError',
    'PointEstimate',
    'PosteriorSummary',
    'equal_tailed_interval',
    'AtomKind',
    'BBWeightDraw',
    'ScaledWeightMode',
]
