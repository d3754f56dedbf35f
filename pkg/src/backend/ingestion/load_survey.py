"""
CSV ingestion for survey samples and finite populations.

Columns are mapped through a SurveySchema rather than fixed names. Numeric
covariates are parsed as decimal reals; anything that does not parse (or is
listed in ``categorical_columns``) stays a string label.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from models.survey import Population, SchemaError, SurveyDataset, SurveySchema, SurveyValidationError, ValidationReport
from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_SIZE_COLUMN = "measure_of_size"


def _parse_real(value) -> float:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return float("nan")
    try:
        return float(value)
    except (TypeError, ValueError):
        return float("nan")


def _parse_reals(series: pd.Series) -> np.ndarray:
    return np.asarray([_parse_real(v) for v in series.tolist()], dtype=float)


def _is_numeric_column(series: pd.Series) -> bool:
    present = series.dropna()
    if present.empty:
        return True
    try:
        for value in present.tolist():
            float(value)
    except (TypeError, ValueError):
        return False
    return True


def read_csv_strings(path: Path) -> pd.DataFrame:
    """Read a CSV keeping every cell as text; empty cells become NaN."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    return pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[""], encoding="utf-8")


def _require_columns(frame: pd.DataFrame, columns: Iterable[str], path: Path) -> None:
    missing = [c for c in columns if c and c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}; found {', '.join(frame.columns)}")


def _covariate_columns(frame: pd.DataFrame, schema: SurveySchema, exclude: Iterable[str] = ()) -> List[str]:
    if schema.covariate_columns is not None:
        return list(schema.covariate_columns)
    taken = set(schema.design_columns()) | set(exclude)
    if schema.outcome_column:
        taken.add(schema.outcome_column)
    return [c for c in frame.columns if c not in taken]


def parse_covariates(frame: pd.DataFrame, columns: List[str], categorical: Iterable[str]) -> pd.DataFrame:
    forced = set(categorical)
    parsed = {}
    for col in columns:
        series = frame[col]
        if col not in forced and _is_numeric_column(series):
            parsed[col] = _parse_reals(series)
        else:
            parsed[col] = series.astype(object).where(series.notna(), np.nan)
    return pd.DataFrame(parsed, columns=columns)


def survey_from_frame(frame: pd.DataFrame, schema: SurveySchema, source: str = "<frame>",
                      exclude: Iterable[str] = ()) -> SurveyDataset:
    """Build a validated dataset from a string-typed frame."""
    _require_columns(frame, schema.design_columns() + [schema.outcome_column], Path(source))
    cov_cols = _covariate_columns(frame, schema, exclude)
    _require_columns(frame, cov_cols, Path(source))

    covariates = parse_covariates(frame, cov_cols, schema.categorical_columns)
    outcome = _parse_reals(frame[schema.outcome_column]) if schema.outcome_column else None
    ids = frame[schema.id_column].tolist() if schema.id_column else None

    missing_design = frame[[schema.stratum_column, schema.cluster_column]].isna().any(axis=1).to_numpy()
    if missing_design.any():
        rows = ", ".join(str(r + 1) for r in np.flatnonzero(missing_design)[:10])
        raise SurveyValidationError(ValidationReport(errors=[f"missing stratum or cluster label in row(s) {rows}"]))

    dataset = SurveyDataset.from_arrays(
        strata=frame[schema.stratum_column].tolist(),
        clusters=frame[schema.cluster_column].tolist(),
        weights=_parse_reals(frame[schema.weight_column]),
        covariates=covariates,
        outcome=outcome,
        outcome_name=schema.outcome_column,
        ids=ids,
        clusters_nested=schema.clusters_nested,
    )
    return dataset


def load_survey_csv(path, schema: SurveySchema) -> SurveyDataset:
    """Load and validate a survey sample; row order is preserved."""
    path = Path(path)
    frame = read_csv_strings(path)
    dataset = survey_from_frame(frame, schema, source=str(path))
    logger.info(
        f"Loaded {dataset.n_obs} observations in {dataset.n_clusters} clusters "
        f"and {dataset.n_strata} strata from {path}"
    )
    return dataset


def survey_to_frame(dataset: SurveyDataset, schema: SurveySchema) -> pd.DataFrame:
    columns = {}
    if schema.id_column:
        columns[schema.id_column] = dataset.ids
    columns[schema.stratum_column] = dataset.strata
    columns[schema.cluster_column] = dataset.clusters
    columns[schema.weight_column] = dataset.weights
    if dataset.outcome is not None:
        columns[schema.outcome_column or dataset.outcome_name] = dataset.outcome
    frame = pd.DataFrame(columns)
    for col in dataset.covariates.columns:
        frame[col] = dataset.covariates[col].to_numpy()
    return frame


def write_survey_csv(dataset: SurveyDataset, path, schema: SurveySchema) -> Path:
    """Inverse of :func:`load_survey_csv` for the same schema."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    survey_to_frame(dataset, schema).to_csv(path, index=False, lineterminator="\n")
    return path


def filter_mask(dataset: SurveyDataset, column: str, values: Iterable) -> np.ndarray:
    wanted = {str(v) for v in values}
    return np.isin(dataset.labels(column), list(wanted))


def filter_dataset(dataset: SurveyDataset, column: str, values: Iterable) -> Tuple[SurveyDataset, np.ndarray]:
    """Restrict to rows whose ``column`` label is in ``values`` (e.g. urban only)."""
    mask = filter_mask(dataset, column, values)
    if not mask.any():
        raise SurveyValidationError(ValidationReport(errors=[f"no observations with {column} in {sorted(map(str, values))}"]))
    return dataset.subset(mask), mask


def load_population_csv(path, schema: SurveySchema, size_column: str = DEFAULT_SIZE_COLUMN) -> Population:
    """Load a finite population; the measure of size must be constant within each cluster."""
    path = Path(path)
    frame = read_csv_strings(path)
    _require_columns(frame, [size_column], path)
    units = survey_from_frame(frame, schema, source=str(path), exclude=[size_column])

    sizes = _parse_reals(frame[size_column])
    per_cluster = pd.DataFrame({"code": units.cluster_codes, "size": sizes}).groupby("code")["size"]
    if (per_cluster.nunique() > 1).any():
        raise SurveyValidationError(ValidationReport(errors=[f"{size_column} varies within a cluster"]))
    population = Population(units=units, measure_of_size=per_cluster.first().sort_index().to_numpy())
    logger.info(f"Loaded population of {population.n_units} units in {units.n_clusters} clusters from {path}")
    return population


def write_population_csv(population: Population, path, schema: SurveySchema,
                         size_column: str = DEFAULT_SIZE_COLUMN) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = survey_to_frame(population.units, schema)
    frame.insert(len(schema.design_columns()), size_column, population.measure_of_size[population.units.cluster_codes])
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def population_schema(categorical: Optional[List[str]] = None) -> SurveySchema:
    """Schema used for populations written by the synthetic generator."""
    return SurveySchema(
        id_column="unit_id",
        stratum_column="stratum",
        cluster_column="cluster",
        weight_column="weight",
        categorical_columns=categorical or [],
    )
