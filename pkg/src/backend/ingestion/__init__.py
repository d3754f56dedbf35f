"""
CSV loaders and the synthetic population generator.
"""

from .load_survey import (
    filter_dataset,
    load_population_csv,
    load_survey_csv,
    population_schema,
    write_population_csv,
    write_survey_csv,
)
from .load_cate_draws import load_cate_draws, write_cate_matrix_csv
from .synthetic_population import (
    CovariateSpec,
    PopulationSpec,
    SpecError,
    generate_synthetic_population,
    informative_spec,
)

__all__ = [
    'filter_dataset',
    'load_population_csv',
    'load_survey_csv',
    'population_schema',
    'write_population_csv',
    'write_survey_csv',
    'load_cate_draws',
    'write_cate_matrix_csv',
    'CovariateSpec',
    'PopulationSpec',
    'SpecError',
    'generate_synthetic_population',
    'informative_spec',
]
