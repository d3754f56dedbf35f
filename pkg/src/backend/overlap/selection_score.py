"""
Selection scores, their complier-based standardisation and low-support flags.

The raw score is P(complier | X, source) * P(source | X), clamped away from 0
and 1 before the logit. Standardisation uses the mean and the n-1 standard
deviation of the logits among source compliers; target units whose
standardised score falls strictly below a complier percentile are flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import logit

from utils.logger import get_logger

from .membership_model import OverlapError

logger = get_logger(__name__)

PROBABILITY_CLAMP = 1e-6
SOURCE, TARGET = "source", "target"


@dataclass(frozen=True, eq=False)
class SelectionScores:
    ids: np.ndarray
    tags: np.ndarray
    raw: np.ndarray
    logit: np.ndarray
    standardized: Optional[np.ndarray] = None
    complier_mean: Optional[float] = None
    complier_sd: Optional[float] = None

    def __len__(self) -> int:
        return self.raw.size

    def mask(self, tag: str) -> np.ndarray:
        return self.tags == tag

    def resolve(self, units) -> np.ndarray:
        """Boolean mask from either a boolean mask or a list of unit ids."""
        arr = np.asarray(units)
        if arr.dtype == bool:
            if arr.shape != self.ids.shape:
                raise OverlapError(f"mask has {arr.size} entries for {self.ids.size} scored units")
            return arr
        wanted = {str(u) for u in arr.tolist()}
        unknown = wanted - set(self.ids.tolist())
        if unknown:
            raise OverlapError(f"unknown unit ids {sorted(unknown)[:5]}")
        return np.isin(self.ids, list(wanted))


@dataclass(frozen=True, eq=False)
class SupportFlags:
    threshold: float
    percentile: float
    ids: np.ndarray
    flagged: np.ndarray
    weights: np.ndarray
    positions: np.ndarray

    @property
    def flagged_proportion(self) -> float:
        """Survey-weighted share of target units below the threshold."""
        return float(np.sum(self.weights * self.flagged) / np.sum(self.weights))

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())


def selection_score(compliance: Sequence[float], membership: Sequence[float], ids: Optional[Sequence] = None,
                    tags: Optional[Sequence[str]] = None, clamp: float = PROBABILITY_CLAMP) -> SelectionScores:
    compliance = np.asarray(compliance, dtype=float)
    membership = np.asarray(membership, dtype=float)
    if compliance.shape != membership.shape or compliance.ndim != 1:
        raise OverlapError(
            f"compliance scores ({compliance.size}) and membership probabilities ({membership.size}) are not aligned"
        )
    for name, values in (("compliance", compliance), ("membership", membership)):
        if not np.all((values >= 0) & (values <= 1)):
            raise OverlapError(f"{name} probabilities must lie in [0, 1]")
    n = compliance.size
    ids = np.asarray([str(i) for i in (ids if ids is not None else range(1, n + 1))], dtype=object)
    tags = np.asarray(tags if tags is not None else [TARGET] * n, dtype=object)
    if ids.size != n or tags.size != n:
        raise OverlapError("ids and tags must align with the scores")
    raw = np.clip(compliance * membership, clamp, 1.0 - clamp)
    return SelectionScores(ids=ids, tags=tags, raw=raw, logit=logit(raw))


def standardize_scores(scores: SelectionScores, compliers) -> SelectionScores:
    """Standardise every logit by the complier mean and n-1 standard deviation."""
    mask = scores.resolve(compliers)
    reference = scores.logit[mask]
    if reference.size < 2:
        raise OverlapError(f"standardisation needs at least 2 compliers, got {reference.size}")
    m_c = float(reference.mean())
    s_c = float(reference.std(ddof=1))
    if not s_c > 0:
        raise OverlapError("complier logit scores have zero standard deviation")
    return replace(scores, standardized=(scores.logit - m_c) / s_c, complier_mean=m_c, complier_sd=s_c)


def flag_low_support(scores: SelectionScores, compliers, percentile: float = 0.05, targets=None,
                     target_weights: Optional[Sequence[float]] = None) -> SupportFlags:
    """Flag targets with standardised score strictly below the complier ``percentile``."""
    if scores.standardized is None:
        raise OverlapError("scores must be standardised before flagging")
    if not 0.0 <= percentile <= 1.0:
        raise OverlapError(f"percentile must lie in [0, 1], got {percentile}")
    complier_mask = scores.resolve(compliers)
    target_mask = scores.mask(TARGET) if targets is None else scores.resolve(targets)
    if not target_mask.any():
        raise OverlapError("no target units to flag")
    threshold = float(np.quantile(scores.standardized[complier_mask], percentile, method="linear"))
    flagged = scores.standardized[target_mask] < threshold
    weights = np.ones(flagged.size) if target_weights is None else np.asarray(target_weights, dtype=float)
    if weights.shape != flagged.shape:
        raise OverlapError(f"{weights.size} target weights for {flagged.size} target units")
    flags = SupportFlags(
        threshold=threshold,
        percentile=percentile,
        ids=scores.ids[target_mask],
        flagged=flagged,
        weights=weights,
        positions=np.flatnonzero(target_mask),
    )
    logger.info(
        f"Support threshold {threshold:.3f} (complier {percentile:.0%} quantile); "
        f"{flags.n_flagged} of {flagged.size} target units flagged, weighted share {flags.flagged_proportion:.3f}"
    )
    return flags


def write_scores_csv(scores: SelectionScores, flags: Optional[SupportFlags], path) -> Path:
    """One row per scored unit: id, group, raw, logit, standardized, flagged (blank for source units)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flagged = pd.Series([""] * len(scores), dtype=object)
    if flags is not None:
        for pos, flag in zip(flags.positions.tolist(), flags.flagged.tolist()):
            flagged.iat[pos] = "true" if flag else "false"
    frame = pd.DataFrame({
        "unit_id": scores.ids,
        "group": scores.tags,
        "raw": scores.raw,
        "logit": scores.logit,
        "standardized": scores.standardized if scores.standardized is not None else np.nan,
        "flagged": flagged,
    })
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
