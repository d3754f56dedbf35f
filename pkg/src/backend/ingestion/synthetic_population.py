"""
Synthetic finite populations with a DHS-like stratum / cluster structure.

Stands in for survey microdata in the simulation harness: strata hold
clusters of 26-40 members by default, every cluster carries a measure of
size, and an age-like covariate has an exactly computable population mean.

Setting ``size_departure_sd > 0`` makes the measure of size depart from the
cluster head count by a log-normal factor; covariates with a nonzero
``size_effect`` shift with that departure, so PPS samples are informative.
"""

from __future__ import annotations

from typing import Any, List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from models.survey import Population, SurveyDataset
from utils.logger import get_logger

logger = get_logger(__name__)


class SpecError(ValueError):
    """Raised for an invalid synthetic population specification."""


class CovariateSpec(BaseModel):
    name: str
    kind: Literal["normal", "bernoulli", "categorical"] = "normal"
    mean: float = 0.0
    sd: float = Field(1.0, ge=0)
    stratum_sd: float = Field(0.0, ge=0)
    cluster_sd: float = Field(0.0, ge=0)
    p: float = Field(0.5, ge=0, le=1)
    levels: List[str] = Field(default_factory=list)
    probs: Optional[List[float]] = None
    size_effect: float = 0.0
    lower: Optional[float] = None
    upper: Optional[float] = None
    integer: bool = False

    @model_validator(mode="after")
    def _check_levels(self) -> "CovariateSpec":
        if self.kind == "categorical":
            if not self.levels:
                raise ValueError(f"categorical covariate {self.name!r} needs levels")
            if self.probs is not None:
                if len(self.probs) != len(self.levels):
                    raise ValueError(f"{self.name!r}: probs and levels differ in length")
                if any(p < 0 for p in self.probs) or not np.isclose(sum(self.probs), 1.0):
                    raise ValueError(f"{self.name!r}: probs must be nonnegative and sum to 1")
        return self


def default_covariates() -> List[CovariateSpec]:
    return [
        CovariateSpec(name="age", kind="normal", mean=29.0, sd=8.5, stratum_sd=1.0, cluster_sd=1.5,
                      lower=15, upper=49, integer=True),
        CovariateSpec(name="urban", kind="bernoulli", p=0.5, stratum_sd=1.5),
        CovariateSpec(name="worked_before", kind="bernoulli", p=0.55, cluster_sd=0.5),
        CovariateSpec(name="education", kind="categorical",
                      levels=["none", "primary", "secondary", "higher"], probs=[0.2, 0.25, 0.4, 0.15]),
        CovariateSpec(name="segment", kind="categorical", levels=[f"seg{i}" for i in range(1, 9)]),
    ]


class PopulationSpec(BaseModel):
    n_strata: int = 6
    clusters_per_stratum: Union[int, List[int]] = 60
    cluster_size_range: Tuple[int, int] = (26, 40)
    size_departure_sd: float = Field(0.0, ge=0)
    covariates: List[CovariateSpec] = Field(default_factory=default_covariates)
    seed: int = 7

    @field_validator("n_strata")
    @classmethod
    def _positive_strata(cls, v: int) -> int:
        if v < 1:
            raise ValueError("n_strata must be at least 1")
        return v

    @model_validator(mode="after")
    def _check_counts(self) -> "PopulationSpec":
        counts = self.cluster_counts()
        if len(counts) != self.n_strata:
            raise ValueError(f"clusters_per_stratum lists {len(counts)} strata, n_strata is {self.n_strata}")
        if min(counts) < 1:
            raise ValueError("every stratum needs at least one cluster")
        lo, hi = self.cluster_size_range
        if lo < 1 or hi < lo:
            raise ValueError(f"cluster_size_range must satisfy 1 <= low <= high, got {self.cluster_size_range}")
        names = [c.name for c in self.covariates]
        if len(set(names)) != len(names):
            raise ValueError("covariate names must be unique")
        return self

    def cluster_counts(self) -> List[int]:
        if isinstance(self.clusters_per_stratum, int):
            return [self.clusters_per_stratum] * self.n_strata
        return list(self.clusters_per_stratum)


def informative_spec(seed: int = 7, **overrides: Any) -> PopulationSpec:
    """Population whose PPS samples are not self-weighting: older clusters get
    a larger measure of size relative to their head count."""
    covariates = default_covariates()
    covariates[0] = covariates[0].model_copy(update={"size_effect": 3.0})
    params = {"size_departure_sd": 0.5, "covariates": covariates, "seed": seed}
    params.update(overrides)
    return PopulationSpec(**params)


def _coerce_spec(spec: Union[PopulationSpec, Mapping[str, Any]]) -> PopulationSpec:
    if isinstance(spec, PopulationSpec):
        return spec
    try:
        return PopulationSpec(**dict(spec))
    except ValidationError as exc:
        raise SpecError(str(exc)) from exc


def _draw_covariate(cov: CovariateSpec, rng: np.random.Generator, stratum_of: np.ndarray,
                    cluster_of: np.ndarray, n_strata: int, n_clusters: int, departure_z: np.ndarray) -> np.ndarray:
    stratum_fx = rng.normal(0.0, cov.stratum_sd, n_strata) if cov.stratum_sd > 0 else np.zeros(n_strata)
    cluster_fx = rng.normal(0.0, cov.cluster_sd, n_clusters) if cov.cluster_sd > 0 else np.zeros(n_clusters)
    shift = stratum_fx[stratum_of] + cluster_fx[cluster_of] + cov.size_effect * departure_z[cluster_of]
    n = len(cluster_of)

    if cov.kind == "normal":
        values = cov.mean + shift + rng.normal(0.0, cov.sd, n)
        if cov.lower is not None or cov.upper is not None:
            values = np.clip(values, cov.lower, cov.upper)
        if cov.integer:
            values = np.floor(values)
        return values.astype(float)

    if cov.kind == "bernoulli":
        base = np.log(cov.p / (1.0 - cov.p)) if 0 < cov.p < 1 else (np.inf if cov.p == 1 else -np.inf)
        prob = 1.0 / (1.0 + np.exp(-(base + shift)))
        return (rng.random(n) < prob).astype(float)

    probs = np.asarray(cov.probs if cov.probs is not None else [1.0 / len(cov.levels)] * len(cov.levels))
    picks = rng.choice(len(cov.levels), size=n, p=probs / probs.sum())
    return np.asarray(cov.levels, dtype=object)[picks]


def generate_synthetic_population(spec: Union[PopulationSpec, Mapping[str, Any]]) -> Population:
    """Pure function of the spec (and its seed)."""
    spec = _coerce_spec(spec)
    rng = np.random.default_rng(spec.seed)
    counts = spec.cluster_counts()
    lo, hi = spec.cluster_size_range

    strata_labels = [f"S{h + 1:02d}" for h in range(spec.n_strata)]
    cluster_stratum = np.repeat(np.arange(spec.n_strata), counts)
    n_clusters = int(cluster_stratum.size)
    cluster_labels = [
        f"{strata_labels[h]}-C{k + 1:03d}" for h in range(spec.n_strata) for k in range(counts[h])
    ]
    head_counts = rng.integers(lo, hi + 1, size=n_clusters)
    departure = (
        rng.normal(0.0, spec.size_departure_sd, n_clusters) if spec.size_departure_sd > 0 else np.zeros(n_clusters)
    )
    departure_z = departure / spec.size_departure_sd if spec.size_departure_sd > 0 else np.zeros(n_clusters)
    measure_of_size = head_counts * np.exp(departure)

    cluster_of = np.repeat(np.arange(n_clusters), head_counts)
    stratum_of = cluster_stratum[cluster_of]
    covariates = pd.DataFrame({
        cov.name: _draw_covariate(cov, rng, stratum_of, cluster_of, spec.n_strata, n_clusters, departure_z)
        for cov in spec.covariates
    })

    units = SurveyDataset.from_arrays(
        strata=np.asarray(strata_labels, dtype=object)[stratum_of],
        clusters=np.asarray(cluster_labels, dtype=object)[cluster_of],
        weights=np.ones(cluster_of.size),
        covariates=covariates,
        ids=[f"u{i + 1:06d}" for i in range(cluster_of.size)],
    )
    population = Population(units=units, measure_of_size=measure_of_size)
    logger.info(
        f"Generated population: {spec.n_strata} strata, {n_clusters} clusters, {units.n_obs} units (seed {spec.seed})"
    )
    return population


def categorical_covariates(spec: PopulationSpec) -> List[str]:
    return [c.name for c in spec.covariates if c.kind == "categorical"]
