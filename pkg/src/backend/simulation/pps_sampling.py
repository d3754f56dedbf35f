"""
Stratified two-stage PPS sampling with replacement from a finite population.

Stage one draws clusters within each stratum with probability proportional to
their measure of size, with replacement; every selection is its own sample
cluster. Stage two takes a simple random sample with replacement of
respondents inside each selected cluster, or every member when the design
says take-all. Weights are the exact inverse selection intensities.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from models.survey import Population, SurveyDataset
from models.weights import ScaledWeightMode
from utils.rng import SeedLike, make_rng

Estimator = Literal["naive", "design", "bb"]


class SamplingError(ValueError):
    """Raised when a design does not fit the population it is applied to."""


class SimulationDesign(BaseModel):
    clusters_per_stratum: Union[int, Dict[str, int]] = 20
    respondents_per_cluster: Optional[Union[int, Dict[str, int]]] = 28
    measure_of_size: Optional[List[float]] = None
    replications: int = Field(500, ge=1)
    estimators: List[Estimator] = Field(default_factory=lambda: ["naive", "design", "bb"])
    level: float = Field(0.95, gt=0, lt=1)
    column: str = "age"
    n_bb: int = Field(500, ge=1)
    mode: ScaledWeightMode = ScaledWeightMode.PRODUCT
    certainty: bool = False
    failure_tolerance: float = Field(0.01, ge=0, le=1)

    @field_validator("clusters_per_stratum", "respondents_per_cluster")
    @classmethod
    def _positive_counts(cls, v):
        if v is None:
            return v
        counts = v.values() if isinstance(v, dict) else [v]
        if any(int(c) < 1 for c in counts):
            raise ValueError("design counts must be at least 1")
        return v

    @field_validator("mode", mode="before")
    @classmethod
    def _parse_mode(cls, v):
        return ScaledWeightMode.parse(v)

    @field_validator("estimators")
    @classmethod
    def _some_estimator(cls, v):
        if not v:
            raise ValueError("at least one estimator is required")
        return list(dict.fromkeys(v))

    def clusters_for(self, stratum: str) -> int:
        if isinstance(self.clusters_per_stratum, dict):
            return int(self.clusters_per_stratum[stratum])
        return int(self.clusters_per_stratum)

    def respondents_for(self, cluster: str) -> Optional[int]:
        if self.respondents_per_cluster is None:
            return None
        if isinstance(self.respondents_per_cluster, dict):
            value = self.respondents_per_cluster.get(cluster)
            return None if value is None else int(value)
        return int(self.respondents_per_cluster)


def select_clusters_pps(sizes, n_draws: int, rng: SeedLike = None) -> np.ndarray:
    """Indices of ``n_draws`` with-replacement selections with p proportional to ``sizes``."""
    sizes = np.asarray(sizes, dtype=float)
    if sizes.size == 0 or not np.all(np.isfinite(sizes) & (sizes > 0)):
        raise SamplingError("PPS selection needs a non-empty vector of positive sizes")
    return make_rng(rng).choice(sizes.size, size=int(n_draws), replace=True, p=sizes / sizes.sum())


def _members_by_cluster(units: SurveyDataset) -> List[np.ndarray]:
    order = np.argsort(units.cluster_codes, kind="stable")
    bounds = np.cumsum(np.bincount(units.cluster_codes, minlength=units.n_clusters))
    return np.split(order, bounds[:-1])


def _design_strata(population: Population, design: SimulationDesign) -> List[int]:
    labels = population.units.stratum_labels
    if isinstance(design.clusters_per_stratum, dict):
        unknown = sorted(set(design.clusters_per_stratum) - set(labels))
        if unknown:
            raise SamplingError(f"design strata {unknown} do not exist in the population")
        return [h for h, lab in enumerate(labels) if lab in design.clusters_per_stratum]
    return list(range(len(labels)))


def draw_pps_two_stage(population: Population, design: SimulationDesign, rng: SeedLike = None) -> SurveyDataset:
    rng = make_rng(rng)
    units = population.units
    sizes = population.measure_of_size if design.measure_of_size is None else np.asarray(design.measure_of_size, float)
    if sizes.shape != (units.n_clusters,):
        raise SamplingError(f"measure of size has {sizes.size} entries, population has {units.n_clusters} clusters")
    members = _members_by_cluster(units)

    rows: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    strata: List[str] = []
    clusters: List[str] = []
    for h in _design_strata(population, design):
        stratum = units.stratum_labels[h]
        in_stratum = np.flatnonzero(units.stratum_codes == h)
        n_h = design.clusters_for(stratum)
        p = sizes[in_stratum] / sizes[in_stratum].sum()
        picks = select_clusters_pps(sizes[in_stratum], n_h, rng)
        for k, pick in enumerate(picks, start=1):
            c = in_stratum[pick]
            pool = members[c]
            if pool.size == 0:
                raise SamplingError(f"cluster {units.cluster_keys[c]} has no members")
            label = units.cluster_keys[c][1]
            m = design.respondents_for(label)
            if m is None:
                chosen = pool
                factor = 1.0 / (n_h * p[pick])
            else:
                chosen = pool[rng.integers(0, pool.size, size=m)]
                factor = pool.size / (n_h * p[pick] * m)
            rows.append(chosen)
            weights.append(units.weights[chosen] * factor)
            strata.extend([stratum] * chosen.size)
            clusters.extend([f"{label}#{k}"] * chosen.size)

    picked = np.concatenate(rows)
    return SurveyDataset.from_arrays(
        strata=strata,
        clusters=clusters,
        weights=np.concatenate(weights),
        covariates=units.covariates.iloc[picked].reset_index(drop=True),
        outcome=None if units.outcome is None else units.outcome[picked],
        outcome_name=units.outcome_name,
        ids=[f"r{i + 1:06d}" for i in range(picked.size)],
        clusters_nested=units.clusters_nested,
    )


def design_from_population(population: Population, clusters_per_stratum: Optional[int] = None,
                           respondents_per_cluster: Optional[int] = 28, **overrides) -> SimulationDesign:
    """Same cluster count in every stratum; defaults to a third of each stratum's clusters (at least 2)."""
    labels = population.units.stratum_labels
    available = population.units.clusters_per_stratum()
    if clusters_per_stratum is None:
        counts = {lab: max(2, int(np.ceil(n / 3))) for lab, n in zip(labels, available)}
    else:
        counts = {lab: int(clusters_per_stratum) for lab in labels}
    return SimulationDesign(
        clusters_per_stratum=counts,
        respondents_per_cluster=respondents_per_cluster,
        **overrides,
    )
