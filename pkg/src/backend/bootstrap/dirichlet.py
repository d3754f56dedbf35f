"""
Dirichlet weight draws for the standard and the cluster-scaled Bayesian bootstrap.

Every draw normalises independent gamma variates (unit exponentials for the
flat case), which stays stable when the concentration parameters are survey
weight totals in the hundreds.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from models.survey import SurveyDataset
from models.weights import AtomKind, BBWeightDraw, ScaledWeightMode
from utils.rng import SeedLike, make_rng


class BootstrapError(ValueError):
    """Raised for invalid bootstrap inputs (counts, weights, alignment)."""


def _normalise_rows(raw: np.ndarray) -> np.ndarray:
    totals = raw.sum(axis=1, keepdims=True)
    if not np.all(totals > 0):
        raise BootstrapError(
            "gamma variates underflowed to zero; concentration parameters are too small to sample"
        )
    return raw / totals


def draw_dirichlet_matrix(k: int, n_draws: int, rng: SeedLike = None,
                          alpha: Optional[np.ndarray] = None) -> np.ndarray:
    """``n_draws x k`` matrix whose rows are Dirichlet(alpha) draws (flat when alpha is None)."""
    if k < 1:
        raise BootstrapError(f"Dirichlet dimension must be at least 1, got {k}")
    if n_draws < 1:
        raise BootstrapError(f"number of draws must be at least 1, got {n_draws}")
    rng = make_rng(rng)
    if alpha is None:
        raw = rng.standard_exponential(size=(n_draws, k))
    else:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (k,):
            raise BootstrapError(f"alpha has shape {alpha.shape}, expected ({k},)")
        if not np.all(np.isfinite(alpha) & (alpha > 0)):
            raise BootstrapError("Dirichlet concentration parameters must be positive and finite")
        raw = rng.standard_gamma(alpha, size=(n_draws, k))
    return _normalise_rows(raw)


def draw_dirichlet_flat(k: int, rng: SeedLike = None,
                        atom_kind: AtomKind = AtomKind.OBSERVATION) -> BBWeightDraw:
    """One draw from the flat Dirichlet on the k-simplex."""
    return BBWeightDraw(weights=draw_dirichlet_matrix(k, 1, rng)[0], atom_kind=atom_kind)


def scaled_concentrations(dataset: SurveyDataset) -> np.ndarray:
    """f_q, the weighted number of observations per cluster."""
    f = dataset.cluster_weight_totals()
    bad = np.flatnonzero(~np.isfinite(f) | (f <= 0))
    if bad.size:
        keys = [dataset.cluster_keys[i] for i in bad[:5]]
        raise BootstrapError(f"cluster weight totals must be positive; offending clusters {keys}")
    return f


def draw_cluster_weight_matrix(dataset: SurveyDataset, mode, n_draws: int, rng: SeedLike = None) -> np.ndarray:
    """``n_draws x l`` matrix of scaled cluster weights, one simplex point per row.

    PRODUCT rows are g_q f_q / sum(g f) with g flat Dirichlet; PSEUDO rows are
    Dirichlet(f_1, ..., f_l).
    """
    mode = ScaledWeightMode.parse(mode)
    f = scaled_concentrations(dataset)
    rng = make_rng(rng)
    if mode is ScaledWeightMode.PRODUCT:
        g = draw_dirichlet_matrix(f.size, n_draws, rng)
        return _normalise_rows(g * f)
    return draw_dirichlet_matrix(f.size, n_draws, rng, alpha=f)


def draw_scaled_cluster_weights(dataset: SurveyDataset, mode, rng: SeedLike = None) -> BBWeightDraw:
    return BBWeightDraw(
        weights=draw_cluster_weight_matrix(dataset, mode, 1, rng)[0],
        atom_kind=AtomKind.CLUSTER,
    )
