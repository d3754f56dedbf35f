"""
Prevalence sweep for a binary unmeasured effect modifier U.

Each unit-level CATE c becomes its expectation over U ~ Bernoulli(xi):
(1 - xi) h(c) + xi h(c + sign * kappa), with h clipping to [-1, 1]. All grid
points reuse one set of cluster weight draws, so the xi = 0 point matches the
plain PATE posterior for the same seed draw for draw.
"""

from __future__ import annotations

from typing import List, Literal, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from bootstrap.dirichlet import draw_cluster_weight_matrix
from bootstrap.pate import pate_draws_from_weights
from models.draws import CateDraws
from models.summaries import PosteriorSummary
from models.survey import SurveyDataset
from models.weights import ScaledWeightMode
from utils.logger import get_logger
from utils.rng import SeedLike, make_rng

from .curves import SensitivityCurve
from .lp_bounds import SensitivityError

logger = get_logger(__name__)

DEFAULT_XI_GRID = [round(0.1 * i, 10) for i in range(11)]


def clip_h(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """max(min(x, 1), -1)."""
    clipped = np.clip(x, -1.0, 1.0)
    return float(clipped) if np.ndim(clipped) == 0 else clipped


def check_grid(values: List[float], low: float, high: float, name: str) -> List[float]:
    if not values:
        raise ValueError(f"{name} grid is empty")
    grid = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(grid)) or grid.min() < low or grid.max() > high:
        raise ValueError(f"{name} grid values must lie in [{low}, {high}]")
    if np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    return [float(v) for v in grid]


class ConfounderSpec(BaseModel):
    kappa: float = 0.66
    sign: Literal[-1, 1] = -1
    xi_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_XI_GRID))

    @field_validator("kappa")
    @classmethod
    def _finite_kappa(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError(f"kappa must be finite, got {v!r}")
        return v

    @field_validator("xi_grid")
    @classmethod
    def _xi_grid(cls, v: List[float]) -> List[float]:
        return check_grid(v, 0.0, 1.0, "xi")


def confounded_draws(draws: np.ndarray, xi: float, kappa: float, sign: int) -> np.ndarray:
    return (1.0 - xi) * clip_h(draws) + xi * clip_h(draws + sign * kappa)


def pate_confounder_curve(dataset: SurveyDataset, cate: CateDraws, spec: Union[ConfounderSpec, dict, None] = None,
                          mode=ScaledWeightMode.PRODUCT, n_bb: int = 1000, rng: SeedLike = None,
                          level: float = 0.95) -> SensitivityCurve:
    if not isinstance(spec, ConfounderSpec):
        try:
            spec = ConfounderSpec(**(spec or {}))
        except ValidationError as exc:
            raise SensitivityError(str(exc)) from exc
    if not np.isfinite(spec.kappa):
        raise SensitivityError(f"kappa must be finite, got {spec.kappa!r}")
    cate.check_aligned(dataset)
    if int(n_bb) < 1:
        raise SensitivityError(f"n_bb must be at least 1, got {n_bb}")

    weights = draw_cluster_weight_matrix(dataset, mode, int(n_bb), make_rng(rng))
    baseline = PosteriorSummary.from_draws(pate_draws_from_weights(dataset, cate.draws, weights), level=level)
    summaries = []
    for xi in spec.xi_grid:
        adjusted = confounded_draws(cate.draws, xi, spec.kappa, spec.sign)
        values = pate_draws_from_weights(dataset, adjusted, weights)
        summaries.append(PosteriorSummary.from_draws(values, level=level, method="confounder"))
        logger.debug(f"xi={xi:.3f}: PATE {summaries[-1].mean:.4f}")
    logger.info(f"Confounder sweep over {len(spec.xi_grid)} prevalence values (kappa {spec.kappa}, sign {spec.sign:+d})")
    return SensitivityCurve(kind="confounder", parameters=spec.xi_grid, summaries=summaries, baseline=baseline)
