"""
Sensitivity curves: a parameter grid against PATE posterior summaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import pandas as pd

from models.summaries import PosteriorSummary

from .lp_bounds import SensitivityError

CONFOUNDER_COLUMNS = ["parameter", "mean", "ci_lower", "ci_upper"]
SHIFT_COLUMNS = [
    "parameter",
    "lower_mean", "lower_ci_lower", "lower_ci_upper",
    "upper_mean", "upper_ci_lower", "upper_ci_upper",
]


@dataclass(eq=False)
class SensitivityCurve:
    kind: Literal["confounder", "shift"]
    parameters: np.ndarray
    summaries: List[PosteriorSummary] = field(default_factory=list)
    lower: List[PosteriorSummary] = field(default_factory=list)
    upper: List[PosteriorSummary] = field(default_factory=list)
    baseline: Optional[PosteriorSummary] = None

    def __post_init__(self):
        self.parameters = np.asarray(self.parameters, dtype=float)
        expected = self.parameters.size
        sizes = [len(self.summaries)] if self.kind == "confounder" else [len(self.lower), len(self.upper)]
        if any(s != expected for s in sizes):
            raise SensitivityError(f"{self.kind} curve has {sizes} summaries for {expected} grid points")

    def __len__(self) -> int:
        return self.parameters.size

    def to_frame(self) -> pd.DataFrame:
        if self.kind == "confounder":
            rows = [
                {"parameter": p, "mean": s.mean, "ci_lower": s.ci_lower, "ci_upper": s.ci_upper}
                for p, s in zip(self.parameters, self.summaries)
            ]
            return pd.DataFrame(rows, columns=CONFOUNDER_COLUMNS)
        rows = [
            {
                "parameter": p,
                "lower_mean": lo.mean, "lower_ci_lower": lo.ci_lower, "lower_ci_upper": lo.ci_upper,
                "upper_mean": hi.mean, "upper_ci_lower": hi.ci_lower, "upper_ci_upper": hi.ci_upper,
            }
            for p, lo, hi in zip(self.parameters, self.lower, self.upper)
        ]
        return pd.DataFrame(rows, columns=SHIFT_COLUMNS)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        return path


def first_crossing(curve: SensitivityCurve, bound: Literal["lower", "upper"] = "lower",
                   statistic: Literal["interval", "mean"] = "interval") -> Optional[float]:
    """Smallest grid parameter at which the curve reaches zero.

    The side is taken from the first grid point's mean: a positive curve
    crosses when its interval lower end (or its mean) is <= 0, a negative one
    when the interval upper end (or mean) is >= 0. Shift curves follow the
    ``bound`` summaries. Returns None if the curve never gets there.
    """
    if curve.kind == "confounder":
        series = curve.summaries
    else:
        series = curve.lower if bound == "lower" else curve.upper
    if not series:
        return None
    positive = series[0].mean >= 0
    for parameter, s in zip(curve.parameters, series):
        if statistic == "mean":
            reached = s.mean <= 0 if positive else s.mean >= 0
        else:
            reached = s.ci_lower <= 0 if positive else s.ci_upper >= 0
        if reached:
            return float(parameter)
    return None
