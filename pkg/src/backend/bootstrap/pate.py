"""
PATE and population-mean posteriors from the cluster-scaled Bayesian bootstrap.

Output draw b pairs CATE row ``b mod D`` with its own independent cluster
weight draw. Cluster means and the weighted sum are accumulated relative to a
per-row reference value, so a constant row reproduces its constant exactly.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np

from models.draws import CateDraws
from models.summaries import PosteriorSummary
from models.survey import SurveyDataset
from models.weights import ScaledWeightMode
from utils.logger import get_logger
from utils.rng import SeedLike, make_rng

from .dirichlet import BootstrapError, draw_cluster_weight_matrix

logger = get_logger(__name__)


def cluster_means(dataset: SurveyDataset, row: np.ndarray, ref: Optional[float] = None) -> np.ndarray:
    """Unweighted within-cluster means of one value per observation."""
    row = np.asarray(row, dtype=float)
    ref = float(row[0]) if ref is None else ref
    sums = np.bincount(dataset.cluster_codes, weights=row - ref, minlength=dataset.n_clusters)
    return ref + sums / dataset.cluster_sizes()


def cluster_fractions(dataset: SurveyDataset, column: str) -> Tuple[List[str], np.ndarray]:
    """Share of each cluster's observations falling in each label of ``column``.

    Returns the labels (first-appearance order) and an ``l x k`` matrix.
    """
    labels = dataset.labels(column)
    levels = list(dict.fromkeys(labels.tolist()))
    index = {lab: j for j, lab in enumerate(levels)}
    cols = np.asarray([index[lab] for lab in labels], dtype=np.int64)
    counts = np.zeros((dataset.n_clusters, len(levels)))
    np.add.at(counts, (dataset.cluster_codes, cols), 1.0)
    return levels, counts / dataset.cluster_sizes()[:, None]


def pate_draws_from_weights(dataset: SurveyDataset, draws: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Combine a D x m draw matrix with an n_bb x l cluster weight matrix."""
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    n_bb = weights.shape[0]
    if weights.shape[1] != dataset.n_clusters:
        raise BootstrapError(f"weight matrix has {weights.shape[1]} columns, dataset has {dataset.n_clusters} clusters")
    n_rows = min(draws.shape[0], n_bb)
    refs = draws[:n_rows, 0].copy()
    means = np.vstack([cluster_means(dataset, draws[d], refs[d]) for d in range(n_rows)])
    pick = np.arange(n_bb) % draws.shape[0]
    centred = means[pick] - refs[pick][:, None]
    return refs[pick] + np.einsum("bq,bq->b", weights, centred)


def _check_n_bb(n_bb: int) -> int:
    if int(n_bb) < 1:
        raise BootstrapError(f"n_bb must be at least 1, got {n_bb}")
    return int(n_bb)


def estimate_pate(dataset: SurveyDataset, cate: CateDraws, mode=ScaledWeightMode.PRODUCT, n_bb: int = 1000,
                  rng: SeedLike = None, level: float = 0.95) -> PosteriorSummary:
    """Posterior of the target-population PATE."""
    n_bb = _check_n_bb(n_bb)
    cate.check_aligned(dataset)
    weights = draw_cluster_weight_matrix(dataset, mode, n_bb, make_rng(rng))
    values = pate_draws_from_weights(dataset, cate.draws, weights)
    summary = PosteriorSummary.from_draws(values, level=level, method="bb")
    logger.info(
        f"PATE over {dataset.n_clusters} clusters ({ScaledWeightMode.parse(mode).value}, {n_bb} draws): "
        f"{summary.mean:.4f} ({summary.sd:.4f})"
    )
    return summary


def estimate_mean(dataset: SurveyDataset, column: Optional[str] = None, mode=ScaledWeightMode.PRODUCT,
                  n_bb: int = 1000, rng: SeedLike = None, level: float = 0.95) -> PosteriorSummary:
    """Posterior of a population mean; the observed column acts as a 1 x m draw matrix."""
    n_bb = _check_n_bb(n_bb)
    name = column or dataset.outcome_name
    if name is None:
        raise BootstrapError("dataset carries no outcome; name a column to average")
    values = dataset.column(name)
    if not np.all(np.isfinite(values)):
        raise BootstrapError(f"column {name!r} has missing or non-finite values")
    weights = draw_cluster_weight_matrix(dataset, mode, n_bb, make_rng(rng))
    draws = pate_draws_from_weights(dataset, values.reshape(1, -1), weights)
    return PosteriorSummary.from_draws(draws, level=level, method="bb")


def estimate_outcome_table(dataset: SurveyDataset, y0: CateDraws, y1: CateDraws, mode=ScaledWeightMode.PRODUCT,
                           n_bb: int = 1000, rng: SeedLike = None, level: float = 0.95) -> Dict[str, PosteriorSummary]:
    """Target means of E[Y(0)|x], E[Y(1)|x] and their difference under one set of weight draws."""
    n_bb = _check_n_bb(n_bb)
    y0.check_aligned(dataset)
    y1.check_aligned(dataset)
    if y0.n_draws != y1.n_draws:
        raise BootstrapError(f"Y(0) has {y0.n_draws} draws but Y(1) has {y1.n_draws}")
    weights = draw_cluster_weight_matrix(dataset, mode, n_bb, make_rng(rng))
    mean0 = pate_draws_from_weights(dataset, y0.draws, weights)
    mean1 = pate_draws_from_weights(dataset, y1.draws, weights)
    return {
        "y0": PosteriorSummary.from_draws(mean0, level=level, method="bb"),
        "y1": PosteriorSummary.from_draws(mean1, level=level, method="bb"),
        "difference": PosteriorSummary.from_draws(mean1 - mean0, level=level, method="bb"),
    }


def source_average(cate: CateDraws, level: float = 0.95) -> PosteriorSummary:
    """Unweighted average effect among the source units, per posterior draw."""
    return PosteriorSummary.from_draws(cate.draws.mean(axis=1), level=level, method="source")


def segment_shares(dataset: SurveyDataset, segment_column: str, mode=ScaledWeightMode.PRODUCT,
                   n_bb: int = 1000, rng: SeedLike = None, level: float = 0.95) -> Dict[str, PosteriorSummary]:
    """Posterior population share of each segment label."""
    n_bb = _check_n_bb(n_bb)
    levels, fractions = cluster_fractions(dataset, segment_column)
    weights = draw_cluster_weight_matrix(dataset, mode, n_bb, make_rng(rng))
    shares = weights @ fractions
    return {
        label: PosteriorSummary.from_draws(shares[:, j], level=level, method="bb")
        for j, label in enumerate(levels)
    }

