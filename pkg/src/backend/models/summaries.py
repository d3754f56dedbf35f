"""
Result envelopes shared by the Bayesian and frequentist estimators.

PosteriorSummary and PointEstimate serialize to the same JSON shape
({mean, sd, ci_lower, ci_upper, level, method}) so combined method reports can
stack rows from either kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np
from scipy import stats


def equal_tailed_interval(draws: np.ndarray, level: float) -> tuple:
    """Equal-tailed interval with linear interpolation between order statistics."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(draws, [alpha, 1.0 - alpha], method="linear")
    return float(lower), float(upper)


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    draws: np.ndarray
    mean: float
    sd: float
    ci_lower: float
    ci_upper: float
    level: float = 0.95
    method: str = "bb"

    @classmethod
    def from_draws(cls, draws: Sequence[float], level: float = 0.95, method: str = "bb") -> "PosteriorSummary":
        values = np.array(draws, dtype=float, copy=True)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("posterior summary needs a non-empty vector of draws")
        values.setflags(write=False)
        sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
        lower, upper = equal_tailed_interval(values, level)
        return cls(
            draws=values,
            mean=float(values.mean()),
            sd=sd,
            ci_lower=lower,
            ci_upper=upper,
            level=level,
            method=method,
        )

    @property
    def value(self) -> float:
        return self.mean

    @property
    def n_draws(self) -> int:
        return int(self.draws.size)

    def mc_standard_error(self) -> float:
        """Monte Carlo standard error of the posterior mean."""
        return self.sd / np.sqrt(self.n_draws)

    def covers(self, truth: float, tol: float = 1e-12) -> bool:
        slack = tol * max(1.0, abs(truth))
        return self.ci_lower - slack <= truth <= self.ci_upper + slack

    def to_dict(self, keep_draws: bool = False) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "method": self.method,
            "mean": self.mean,
            "sd": self.sd,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "level": self.level,
        }
        if keep_draws:
            out["draws"] = self.draws.tolist()
        return out


@dataclass(frozen=True)
class PointEstimate:
    """Frequentist estimate with a symmetric normal-theory interval."""

    value: float
    std_error: float
    ci_lower: float
    ci_upper: float
    method: str
    level: float = 0.95

    @classmethod
    def normal(cls, value: float, std_error: float, method: str, level: float = 0.95) -> "PointEstimate":
        if std_error < 0 or not np.isfinite(std_error):
            raise ValueError(f"standard error must be finite and nonnegative, got {std_error}")
        z = float(stats.norm.ppf(0.5 + level / 2.0))
        half = z * std_error
        return cls(
            value=float(value),
            std_error=float(std_error),
            ci_lower=float(value - half),
            ci_upper=float(value + half),
            method=method,
            level=level,
        )

    @property
    def mean(self) -> float:
        return self.value

    @property
    def sd(self) -> float:
        return self.std_error

    def covers(self, truth: float, tol: float = 1e-12) -> bool:
        slack = tol * max(1.0, abs(truth))
        return self.ci_lower - slack <= truth <= self.ci_upper + slack

    def to_dict(self, keep_draws: bool = False) -> Dict[str, Any]:
        return {
            "method": self.method,
            "mean": self.value,
            "sd": self.std_error,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "level": self.level,
        }
