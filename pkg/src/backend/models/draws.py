"""
Posterior CATE draws aligned to the observations of a target dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from models.survey import SurveyDataset


class AlignmentError(ValueError):
    """Raised when draws and dataset observations do not line up."""


class DrawsValidationError(ValueError):
    """Raised when a draw matrix holds non-finite entries."""


@dataclass(frozen=True, eq=False)
class CateDraws:
    """D x m matrix of CATE draws; column j belongs to observation ``ids[j]``.

    Entries outside [-1, 1] are legal (effects need not be on a proportion
    scale) and only produce a warning.
    """

    draws: np.ndarray
    ids: np.ndarray
    warnings: List[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        matrix = np.array(self.draws, dtype=float, copy=True)
        if matrix.ndim == 1:
            matrix = matrix.reshape(1, -1)
        if matrix.ndim != 2 or matrix.shape[0] == 0:
            raise DrawsValidationError(f"draws must be a non-empty 2-d matrix, got shape {matrix.shape}")
        ids = np.asarray([str(i) for i in self.ids], dtype=object)
        if matrix.shape[1] != len(ids):
            raise AlignmentError(f"draw matrix has {matrix.shape[1]} columns for {len(ids)} observation ids")
        bad = ~np.isfinite(matrix)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise DrawsValidationError(
                f"{int(bad.sum())} non-finite draw entries (first at draw {row + 1}, observation {ids[col]!r})"
            )
        warnings = list(self.warnings)
        outside = int(np.count_nonzero(np.abs(matrix) > 1.0))
        if outside:
            warnings.append(f"{outside} draw entries lie outside [-1, 1]")
        matrix.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "draws", matrix)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "warnings", warnings)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def n_obs(self) -> int:
        return self.draws.shape[1]

    @classmethod
    def constant(cls, dataset: SurveyDataset, values: Sequence[float]) -> "CateDraws":
        """Degenerate 1 x m draw matrix, e.g. an observed outcome."""
        return cls(draws=np.asarray(values, dtype=float).reshape(1, -1), ids=dataset.ids)

    def check_aligned(self, dataset: SurveyDataset) -> None:
        if self.n_obs != dataset.n_obs:
            raise AlignmentError(f"draws cover {self.n_obs} observations, dataset has {dataset.n_obs}")
        if not np.array_equal(self.ids, dataset.ids):
            first = int(np.flatnonzero(self.ids != dataset.ids)[0])
            raise AlignmentError(
                f"draw column {first + 1} is observation {self.ids[first]!r}, dataset row is {dataset.ids[first]!r}"
            )

    def subset(self, mask: Sequence[bool]) -> "CateDraws":
        keep = np.asarray(mask, dtype=bool)
        return CateDraws(draws=self.draws[:, keep], ids=self.ids[keep])

    def replace(self, draws: np.ndarray) -> "CateDraws":
        return CateDraws(draws=draws, ids=self.ids)

    def unit_means(self) -> np.ndarray:
        """Posterior mean effect per observation."""
        return self.draws.mean(axis=0)
