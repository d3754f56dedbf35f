"""
Source-membership classifier P(T=0 | X) for the stacked source + target sample.

Weighted logistic regression fit by iteratively reweighted least squares with
a small ridge penalty on the slopes (the intercept is unpenalised).
Categorical covariates are dummy coded with the first level dropped; numeric
columns are centred and scaled before fitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import expit

from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_RIDGE = 1e-6
DIVERGENCE_LIMIT = 1e3


class OverlapError(ValueError):
    """Raised for inconsistent overlap-diagnostic inputs."""


class SeparationError(RuntimeError):
    """Raised when a covariate (or combination) perfectly separates the groups."""


class ConvergenceError(RuntimeError):
    """Raised when IRLS does not converge within max_iter iterations."""


@dataclass
class DesignMatrix:
    columns: List[str]
    sources: List[str]
    center: np.ndarray
    scale: np.ndarray
    categorical: List[str] = field(default_factory=list)

    @classmethod
    def build(cls, covariates: pd.DataFrame, categorical: Optional[Sequence[str]] = None) -> "DesignMatrix":
        categorical = list(categorical) if categorical is not None else [
            c for c in covariates.columns if not pd.api.types.is_numeric_dtype(covariates[c])
        ]
        dummies = _dummies(covariates, categorical, drop_first=True)
        raw = dummies.to_numpy(dtype=float)
        center = raw.mean(axis=0)
        scale = raw.std(axis=0)
        keep = scale > 0
        dropped = [c for c, k in zip(dummies.columns, keep) if not k]
        if dropped:
            logger.debug(f"Dropping constant design columns: {dropped}")
        columns = [str(c) for c, k in zip(dummies.columns, keep) if k]
        sources = [_source_column(c, categorical) for c in columns]
        return cls(columns=columns, sources=sources, center=center[keep], scale=scale[keep],
                   categorical=categorical)

    def transform(self, covariates: pd.DataFrame) -> np.ndarray:
        dummies = _dummies(covariates, self.categorical, drop_first=False)
        dummies = dummies.reindex(columns=self.columns, fill_value=0.0)
        x = (dummies.to_numpy(dtype=float) - self.center) / self.scale
        return np.column_stack([np.ones(len(covariates)), x])


def _dummies(covariates: pd.DataFrame, categorical: Sequence[str], drop_first: bool) -> pd.DataFrame:
    if covariates.shape[1] == 0:
        return pd.DataFrame(index=covariates.index)
    return pd.get_dummies(covariates, columns=list(categorical), drop_first=drop_first, dtype=float)


def _source_column(dummy: str, categorical: Sequence[str]) -> str:
    for col in categorical:
        if dummy.startswith(f"{col}_"):
            return col
    return dummy


@dataclass
class MembershipFit:
    """P(T=0 | X) for every stacked unit, plus the fitted coefficients if any."""

    probabilities: np.ndarray
    coefficients: Optional[pd.Series] = None
    n_iter: int = 0
    design: Optional[DesignMatrix] = field(default=None, repr=False)

    def predict(self, covariates: pd.DataFrame) -> np.ndarray:
        if self.design is None or self.coefficients is None:
            raise OverlapError("membership probabilities were supplied externally; nothing to predict with")
        return expit(self.design.transform(covariates) @ self.coefficients.to_numpy())


def _check_separation(x: np.ndarray, y: np.ndarray, design: DesignMatrix) -> None:
    """Single-column separation: one group's range lies strictly beyond the other's."""
    source, target = y == 1, y == 0
    for j in range(len(design.columns)):
        col = x[:, j + 1]
        lo_s, hi_s = col[source].min(), col[source].max()
        lo_t, hi_t = col[target].min(), col[target].max()
        if hi_s < lo_t or hi_t < lo_s:
            raise SeparationError(
                f"covariate {design.sources[j]!r} perfectly separates source from target units"
            )


def fit_membership_model(covariates: pd.DataFrame, in_target: Sequence[int], weights: Optional[Sequence[float]] = None,
                         categorical: Optional[Sequence[str]] = None, ridge: float = DEFAULT_RIDGE,
                         max_iter: int = 100, tol: float = 1e-10) -> MembershipFit:
    """Fit P(T=0 | X) on stacked units where ``in_target`` is the T indicator (1 = target)."""
    t = np.asarray(in_target, dtype=float)
    if t.shape != (len(covariates),):
        raise OverlapError(f"T indicator has {t.size} entries for {len(covariates)} covariate rows")
    if not np.isin(t, (0.0, 1.0)).all():
        raise OverlapError("T indicator must be 0 (source) or 1 (target)")
    y = 1.0 - t
    if y.sum() == 0 or y.sum() == y.size:
        raise OverlapError("both source (T=0) and target (T=1) units are required")
    if covariates.isna().any().any():
        raise OverlapError("membership covariates must be complete")

    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape or not np.all(np.isfinite(w) & (w > 0)):
        raise OverlapError("membership weights must be positive, finite and aligned")
    w = w / w.mean()

    design = DesignMatrix.build(covariates, categorical)
    x = design.transform(covariates)
    _check_separation(x, y, design)

    penalty = np.full(x.shape[1], ridge)
    penalty[0] = 0.0
    beta = np.zeros(x.shape[1])
    beta[0] = np.log(np.sum(w * y) / np.sum(w * (1 - y)))

    for iteration in range(1, max_iter + 1):
        p = expit(x @ beta)
        gradient = x.T @ (w * (y - p)) - penalty * beta
        hessian = x.T @ ((w * p * (1 - p))[:, None] * x) + np.diag(penalty)
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError as exc:
            raise SeparationError("IRLS Hessian is singular; covariates may separate the groups") from exc
        beta = beta + step
        delta = float(np.max(np.abs(step)))
        logger.debug(f"IRLS iteration {iteration}: max |step| = {delta:.3e}")
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > DIVERGENCE_LIMIT:
            raise SeparationError("IRLS coefficients diverged; a covariate combination separates the groups")
        if delta < tol:
            break
    else:
        raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations (last step {delta:.3e})")

    coefficients = pd.Series(beta, index=["(intercept)"] + design.columns)
    logger.info(f"Membership model converged in {iteration} iterations on {y.size} units")
    return MembershipFit(probabilities=expit(x @ beta), coefficients=coefficients, n_iter=iteration, design=design)


def membership_from_probabilities(probabilities: Sequence[float]) -> MembershipFit:
    """Wrap externally estimated P(T=0 | X) values (e.g. from a tree ensemble)."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or not np.all((p >= 0) & (p <= 1)):
        raise OverlapError("membership probabilities must lie in [0, 1]")
    return MembershipFit(probabilities=p)
