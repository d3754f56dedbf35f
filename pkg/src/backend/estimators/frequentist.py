"""
Frequentist comparators for population means.

naive_mean treats the sample as simple random; design_mean is the Hajek
weighted mean with a Taylor-linearised, with-replacement (ultimate cluster)
variance. No finite population correction is applied at either stage.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from models.summaries import PointEstimate
from models.survey import SurveyDataset
from utils.logger import get_logger

logger = get_logger(__name__)


class DesignError(ValueError):
    """Raised when a design cannot support the requested variance estimate."""


def _values(dataset: SurveyDataset, column: Optional[str]) -> np.ndarray:
    name = column or dataset.outcome_name
    if name is None:
        raise DesignError("dataset carries no outcome; name a column to estimate")
    values = dataset.column(name)
    if not np.all(np.isfinite(values)):
        raise DesignError(f"column {name!r} has missing or non-finite values")
    return values


def naive_mean(dataset: SurveyDataset, column: Optional[str] = None, level: float = 0.95) -> PointEstimate:
    y = _values(dataset, column)
    n = y.size
    if n < 2:
        raise DesignError(f"naive variance needs at least 2 observations, got {n}")
    se = float(np.std(y, ddof=1) / np.sqrt(n))
    return PointEstimate.normal(float(np.mean(y)), se, method="naive", level=level)


def linearized_variance(dataset: SurveyDataset, y: np.ndarray, estimate: float, certainty: bool = False) -> float:
    """V = sum_h n_h/(n_h - 1) sum_c (z_hc - zbar_h)^2 over cluster totals of the
    linearised residuals u_i = w_i (y_i - estimate) / sum(w)."""
    w = dataset.weights
    u = w * (y - estimate) / w.sum()
    z = np.bincount(dataset.cluster_codes, weights=u, minlength=dataset.n_clusters)
    n_h = dataset.clusters_per_stratum()

    lonely = np.flatnonzero(n_h == 1)
    if lonely.size and not certainty:
        names = ", ".join(repr(dataset.stratum_labels[h]) for h in lonely[:5])
        raise DesignError(
            f"stratum {names} has a single cluster; collapse it into a neighbouring stratum "
            f"or treat it as a certainty stratum (certainty=True)"
        )

    stratum = dataset.stratum_codes
    z_bar = np.bincount(stratum, weights=z, minlength=dataset.n_strata) / n_h
    ss = np.bincount(stratum, weights=(z - z_bar[stratum]) ** 2, minlength=dataset.n_strata)
    factor = np.zeros(dataset.n_strata)
    multi = n_h > 1
    factor[multi] = n_h[multi] / (n_h[multi] - 1.0)
    return float(np.sum(factor * ss))


def design_mean(dataset: SurveyDataset, column: Optional[str] = None, certainty: bool = False,
                level: float = 0.95) -> PointEstimate:
    """Hajek mean with linearised stratified-cluster standard error.

    Single-cluster strata raise DesignError unless ``certainty`` is set, in
    which case they contribute zero variance.
    """
    y = _values(dataset, column)
    w = dataset.weights
    estimate = float(np.sum(w * y) / np.sum(w))
    variance = linearized_variance(dataset, y, estimate, certainty=certainty)
    logger.debug(f"design mean {estimate:.6f}, linearised variance {variance:.3e}")
    return PointEstimate.normal(estimate, float(np.sqrt(max(variance, 0.0))), method="design", level=level)
