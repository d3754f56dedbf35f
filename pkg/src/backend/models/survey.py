"""
Survey dataset, finite population and validation report types.

A SurveyDataset is the target-population sample of a stratified two-stage
cluster design: one row per respondent with a stratum label, a cluster (PSU)
label nested in the stratum, a sampling weight and a covariate vector.
Clusters are keyed internally by the (stratum, cluster) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator


class SchemaError(ValueError):
    """Raised when an input file does not carry the columns its schema names."""


class SurveyValidationError(ValueError):
    """Raised when a dataset violates a hard invariant; carries the report."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(report.errors))


class SurveySchema(BaseModel):
    """Column mapping for survey CSV files."""

    stratum_column: str
    cluster_column: str
    weight_column: str
    id_column: Optional[str] = None
    outcome_column: Optional[str] = None
    covariate_columns: Optional[List[str]] = None
    categorical_columns: List[str] = Field(default_factory=list)
    clusters_nested: bool = False

    @model_validator(mode="after")
    def _distinct_design_columns(self) -> "SurveySchema":
        design = [self.stratum_column, self.cluster_column, self.weight_column]
        if self.id_column:
            design.append(self.id_column)
        if len(set(design)) != len(design):
            raise ValueError(f"design columns must be distinct, got {design}")
        return self

    def design_columns(self) -> List[str]:
        cols = [self.stratum_column, self.cluster_column, self.weight_column]
        if self.id_column:
            cols.insert(0, self.id_column)
        return cols


@dataclass
class ValidationReport:
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    summary: Dict[str, Dict[str, int]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> Dict[str, Any]:
        return {"errors": list(self.errors), "warnings": list(self.warnings), "summary": self.summary}


def _as_labels(values: Sequence[Any]) -> np.ndarray:
    return np.asarray([_label(v) for v in values], dtype=object)


def _label(value: Any) -> str:
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return str(int(value))
    return str(value)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def validate_survey(
    strata: np.ndarray,
    clusters: np.ndarray,
    weights: np.ndarray,
    covariates: pd.DataFrame,
    outcome: Optional[np.ndarray] = None,
    clusters_nested: bool = False,
    ids: Optional[np.ndarray] = None,
) -> ValidationReport:
    """Check every hard invariant of a survey sample; rows are reported 1-based."""
    report = ValidationReport()
    n = len(strata)
    if n == 0:
        report.errors.append("dataset has no observations")
        return report
    lengths = {"clusters": len(clusters), "weights": len(weights), "covariates": len(covariates)}
    if outcome is not None:
        lengths["outcome"] = len(outcome)
    if ids is not None:
        lengths["ids"] = len(ids)
    for name, length in lengths.items():
        if length != n:
            report.errors.append(f"{name} has {length} entries, expected {n}")
    if report.errors:
        return report

    w = np.asarray(weights, dtype=float)
    for row in np.flatnonzero(~np.isfinite(w) | (w <= 0)):
        report.errors.append(f"row {row + 1}: weight {w[row]!r} is not strictly positive and finite")

    if ids is not None:
        dup = pd.Series(ids).duplicated()
        for row in np.flatnonzero(dup.to_numpy()):
            report.errors.append(f"row {row + 1}: duplicate observation id {ids[row]!r}")

    if not clusters_nested:
        frame = pd.DataFrame({"stratum": strata, "cluster": clusters})
        spans = frame.groupby("cluster", sort=True)["stratum"].unique()
        for cluster, owners in spans.items():
            if len(owners) > 1:
                report.errors.append(
                    f"cluster {cluster!r} crosses strata {', '.join(sorted(map(str, owners)))}"
                )

    if len(covariates.columns):
        missing = covariates.isna().to_numpy()
        for row, col in zip(*np.nonzero(missing)):
            report.errors.append(f"row {row + 1}: missing value in covariate {covariates.columns[col]!r}")

    if outcome is not None:
        y = np.asarray(outcome, dtype=float)
        for row in np.flatnonzero(~np.isfinite(y)):
            report.errors.append(f"row {row + 1}: outcome is missing or not finite")

    frame = pd.DataFrame({"stratum": strata, "cluster": clusters})
    per_stratum = frame.groupby("stratum", sort=True).agg(
        n_obs=("cluster", "size"), n_clusters=("cluster", "nunique")
    )
    report.summary = {
        str(s): {"n_obs": int(r.n_obs), "n_clusters": int(r.n_clusters)} for s, r in per_stratum.iterrows()
    }
    for stratum, counts in report.summary.items():
        if counts["n_clusters"] == 1:
            report.warnings.append(f"stratum {stratum!r} has a single cluster")
    return report


@dataclass(frozen=True, eq=False)
class SurveyDataset:
    """Immutable target-population sample.

    Build through :meth:`from_arrays`, which validates; the derived cluster
    index (``cluster_codes``) numbers (stratum, cluster) pairs in order of
    first appearance.
    """

    ids: np.ndarray
    strata: np.ndarray
    clusters: np.ndarray
    weights: np.ndarray
    covariates: pd.DataFrame
    outcome: Optional[np.ndarray] = None
    outcome_name: Optional[str] = None
    clusters_nested: bool = False
    cluster_codes: np.ndarray = field(init=False, repr=False, compare=False)
    cluster_keys: Tuple[Tuple[str, str], ...] = field(init=False, repr=False, compare=False)
    stratum_codes: np.ndarray = field(init=False, repr=False, compare=False)
    stratum_labels: Tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        keys = pd.MultiIndex.from_arrays([self.strata, self.clusters])
        codes, uniques = pd.factorize(keys, sort=False)
        cluster_keys = tuple((str(s), str(c)) for s, c in uniques)
        stratum_of_cluster = np.asarray([k[0] for k in cluster_keys], dtype=object)
        s_codes, s_uniques = pd.factorize(stratum_of_cluster, sort=False)
        object.__setattr__(self, "cluster_codes", _readonly(codes.astype(np.int64)))
        object.__setattr__(self, "cluster_keys", cluster_keys)
        object.__setattr__(self, "stratum_codes", _readonly(s_codes.astype(np.int64)))
        object.__setattr__(self, "stratum_labels", tuple(str(s) for s in s_uniques))

    @classmethod
    def from_arrays(
        cls,
        strata: Sequence[Any],
        clusters: Sequence[Any],
        weights: Sequence[float],
        covariates: Optional[pd.DataFrame] = None,
        outcome: Optional[Sequence[float]] = None,
        outcome_name: Optional[str] = None,
        ids: Optional[Sequence[Any]] = None,
        clusters_nested: bool = False,
    ) -> "SurveyDataset":
        strata_arr = _as_labels(strata)
        clusters_arr = _as_labels(clusters)
        n = len(strata_arr)
        weights_arr = np.asarray(weights, dtype=float)
        cov = (covariates if covariates is not None else pd.DataFrame(index=range(n))).reset_index(drop=True)
        ids_arr = _as_labels(ids) if ids is not None else _as_labels(range(1, n + 1))
        y = None if outcome is None else np.asarray(outcome, dtype=float)
        report = validate_survey(strata_arr, clusters_arr, weights_arr, cov, y, clusters_nested, ids_arr)
        if not report.ok:
            raise SurveyValidationError(report)
        return cls(
            ids=_readonly(ids_arr),
            strata=_readonly(strata_arr),
            clusters=_readonly(clusters_arr),
            weights=_readonly(weights_arr),
            covariates=cov.copy(),
            outcome=None if y is None else _readonly(y),
            outcome_name=outcome_name if y is not None else None,
            clusters_nested=clusters_nested,
        )

    @property
    def n_obs(self) -> int:
        return len(self.ids)

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_keys)

    @property
    def n_strata(self) -> int:
        return len(self.stratum_labels)

    def cluster_sizes(self) -> np.ndarray:
        """n_q, observations per cluster."""
        return np.bincount(self.cluster_codes, minlength=self.n_clusters).astype(float)

    def cluster_weight_totals(self) -> np.ndarray:
        """f_q = n_q * mean weight in cluster q, i.e. the cluster's weight total."""
        return np.bincount(self.cluster_codes, weights=self.weights, minlength=self.n_clusters)

    def clusters_per_stratum(self) -> np.ndarray:
        return np.bincount(self.stratum_codes, minlength=self.n_strata)

    def column(self, name: str) -> np.ndarray:
        """Numeric values of the outcome or a covariate column."""
        if self.outcome is not None and name == self.outcome_name:
            return np.asarray(self.outcome, dtype=float)
        if name not in self.covariates.columns:
            raise KeyError(f"column {name!r} is neither the outcome nor a covariate")
        try:
            return self.covariates[name].to_numpy(dtype=float)
        except (TypeError, ValueError) as exc:
            raise TypeError(f"column {name!r} is not numeric") from exc

    def labels(self, name: str) -> np.ndarray:
        """String labels of a (categorical) covariate column."""
        if name not in self.covariates.columns:
            raise KeyError(f"covariate {name!r} not in dataset")
        return _as_labels(self.covariates[name].tolist())

    def subset(self, mask: Sequence[bool]) -> "SurveyDataset":
        """Rows where mask is true; clusters and strata left empty disappear."""
        keep = np.asarray(mask, dtype=bool)
        if keep.shape != (self.n_obs,):
            raise ValueError(f"mask has shape {keep.shape}, expected ({self.n_obs},)")
        return SurveyDataset.from_arrays(
            strata=self.strata[keep],
            clusters=self.clusters[keep],
            weights=self.weights[keep],
            covariates=self.covariates.loc[keep].reset_index(drop=True),
            outcome=None if self.outcome is None else self.outcome[keep],
            outcome_name=self.outcome_name,
            ids=self.ids[keep],
            clusters_nested=self.clusters_nested,
        )

    def with_weights(self, weights: Sequence[float]) -> "SurveyDataset":
        return SurveyDataset.from_arrays(
            strata=self.strata,
            clusters=self.clusters,
            weights=weights,
            covariates=self.covariates,
            outcome=self.outcome,
            outcome_name=self.outcome_name,
            ids=self.ids,
            clusters_nested=self.clusters_nested,
        )

    def equals(self, other: "SurveyDataset") -> bool:
        """Field-for-field equality (used by the CSV round trip)."""
        if not isinstance(other, SurveyDataset):
            return False
        same_outcome = (self.outcome is None and other.outcome is None) or (
            self.outcome is not None
            and other.outcome is not None
            and np.array_equal(self.outcome, other.outcome)
            and self.outcome_name == other.outcome_name
        )
        return (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.strata, other.strata)
            and np.array_equal(self.clusters, other.clusters)
            and np.array_equal(self.weights, other.weights)
            and self.covariates.equals(other.covariates)
            and same_outcome
        )


@dataclass(frozen=True, eq=False)
class Population:
    """A complete finite population (the empirical distribution F*).

    ``units`` holds every record (weights are the number of population members
    each record stands for, 1.0 for a full enumeration); ``measure_of_size`` is
    aligned with ``units.cluster_keys``.
    """

    units: SurveyDataset
    measure_of_size: np.ndarray

    def __post_init__(self):
        mos = np.asarray(self.measure_of_size, dtype=float)
        if mos.shape != (self.units.n_clusters,):
            raise SurveyValidationError(
                ValidationReport(errors=[f"measure of size has {mos.size} entries, expected {self.units.n_clusters}"])
            )
        bad = [self.units.cluster_keys[i] for i in np.flatnonzero(~np.isfinite(mos) | (mos <= 0))]
        if bad:
            raise SurveyValidationError(
                ValidationReport(errors=[f"measure of size must be positive for cluster {k}" for k in bad])
            )
        object.__setattr__(self, "measure_of_size", _readonly(mos))

    @property
    def n_units(self) -> int:
        return self.units.n_obs

    def mean(self, column: str) -> float:
        """Population mean by full enumeration."""
        values = self.units.column(column)
        w = self.units.weights
        return float(np.sum(w * values) / np.sum(w))

    def sd(self, column: str) -> float:
        values = self.units.column(column)
        w = self.units.weights
        mu = np.sum(w * values) / np.sum(w)
        return float(np.sqrt(np.sum(w * (values - mu) ** 2) / np.sum(w)))
