"""
PATE recomputed under a low-support policy.

EXCLUDE drops flagged target units (clusters left empty disappear and the
cluster weight totals are recomputed); NULL_IMPUTE keeps every unit but sets
the flagged units' CATE to zero in every draw.
"""

from __future__ import annotations

from enum import Enum
from typing import Any, Dict, Optional, Union

import numpy as np

from bootstrap.pate import estimate_pate
from models.draws import CateDraws
from models.summaries import PosteriorSummary
from models.survey import SurveyDataset
from models.weights import ScaledWeightMode
from utils.logger import get_logger
from utils.rng import SeedLike, make_rng

from .membership_model import OverlapError
from .selection_score import SupportFlags

logger = get_logger(__name__)


class SupportPolicy(str, Enum):
    EXCLUDE = "exclude"
    NULL_IMPUTE = "null_impute"

    @classmethod
    def parse(cls, value: "str | SupportPolicy") -> "SupportPolicy":
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        aliases = {"exclude": cls.EXCLUDE, "nullimpute": cls.NULL_IMPUTE, "null": cls.NULL_IMPUTE}
        if key not in aliases:
            raise ValueError(f"unknown support policy {value!r}; expected 'exclude' or 'null_impute'")
        return aliases[key]


def _flag_mask(dataset: SurveyDataset, flags: Union[SupportFlags, np.ndarray]) -> np.ndarray:
    mask = np.asarray(flags.flagged if isinstance(flags, SupportFlags) else flags, dtype=bool)
    if mask.shape != (dataset.n_obs,):
        raise OverlapError(f"{mask.size} support flags for {dataset.n_obs} target observations")
    return mask


def pate_with_support_policy(dataset: SurveyDataset, cate: CateDraws, flags: Union[SupportFlags, np.ndarray],
                             policy, mode=ScaledWeightMode.PRODUCT, n_bb: int = 1000, rng: SeedLike = None,
                             level: float = 0.95) -> PosteriorSummary:
    policy = SupportPolicy.parse(policy)
    cate.check_aligned(dataset)
    flagged = _flag_mask(dataset, flags)
    if not flagged.any():
        return estimate_pate(dataset, cate, mode, n_bb, rng, level)

    if policy is SupportPolicy.EXCLUDE:
        keep = ~flagged
        if not keep.any():
            raise OverlapError("excluding flagged units leaves no target observations")
        logger.info(f"Excluding {int(flagged.sum())} low-support observations")
        return estimate_pate(dataset.subset(keep), cate.subset(keep), mode, n_bb, rng, level)

    draws = cate.draws.copy()
    draws[:, flagged] = 0.0
    logger.info(f"Setting CATE to zero for {int(flagged.sum())} low-support observations")
    return estimate_pate(dataset, cate.replace(draws), mode, n_bb, rng, level)


def support_report(dataset: SurveyDataset, cate: CateDraws, flags: SupportFlags, mode=ScaledWeightMode.PRODUCT,
                   n_bb: int = 1000, seed: Optional[int] = None, level: float = 0.95) -> Dict[str, Any]:
    """One row of the low-support table: flagged share and the three PATE variants.

    Every variant is computed from a fresh generator seeded with ``seed``.
    """
    row: Dict[str, Any] = {
        "threshold": flags.threshold,
        "flagged_proportion": flags.flagged_proportion,
        "n_flagged": flags.n_flagged,
        "pate": estimate_pate(dataset, cate, mode, n_bb, make_rng(seed), level),
    }
    try:
        row["pate_excluding"] = pate_with_support_policy(
            dataset, cate, flags, SupportPolicy.EXCLUDE, mode, n_bb, make_rng(seed), level
        )
    except OverlapError as exc:
        logger.warning(f"Exclude policy not computable: {exc}")
        row["pate_excluding"] = None
    row["pate_null_imputed"] = pate_with_support_policy(
        dataset, cate, flags, SupportPolicy.NULL_IMPUTE, mode, n_bb, make_rng(seed), level
    )
    return row
