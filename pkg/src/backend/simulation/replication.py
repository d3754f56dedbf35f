"""
Replication harness: repeated PPS samples from a fixed population, scored by
bias, interval coverage, standard deviation and RMSE per estimator.

Replication r draws all of its randomness from the child stream
(master_seed, r), so results do not depend on the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from bootstrap.pate import estimate_mean
from estimators.frequentist import design_mean, naive_mean
from models.survey import Population
from utils.logger import get_logger
from utils.rng import SeedLike, child_rng, resolve_seed

from .pps_sampling import SimulationDesign, draw_pps_two_stage

logger = get_logger(__name__)

METRIC_COLUMNS = ["method", "bias", "coverage", "sd", "rmse"]
IDENTITY_TOL = 1e-9


class SimulationError(RuntimeError):
    """Raised when too many replications fail or the metrics are inconsistent."""


def replicate_metrics(estimates: np.ndarray, covered: np.ndarray, truth: float) -> Dict[str, float]:
    estimates = np.asarray(estimates, dtype=float)
    errors = estimates - truth
    return {
        "bias": float(errors.mean()),
        "coverage": float(np.mean(covered)),
        "sd": float(estimates.std(ddof=1)) if estimates.size > 1 else 0.0,
        "rmse": float(np.sqrt(np.mean(errors ** 2))),
    }


@dataclass
class MetricsTable:
    truth: float
    replications: int
    metrics: Dict[str, Dict[str, float]]
    failures: int = 0
    level: float = 0.95
    details: pd.DataFrame = field(default_factory=pd.DataFrame, repr=False)

    @property
    def completed(self) -> int:
        return self.replications - self.failures

    def to_frame(self) -> pd.DataFrame:
        rows = [{"method": method, **values} for method, values in self.metrics.items()]
        return pd.DataFrame(rows, columns=METRIC_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "truth": self.truth,
            "replications": self.replications,
            "failures": self.failures,
            "level": self.level,
            "metrics": {m: dict(v) for m, v in self.metrics.items()},
        }

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        return path

    def check_identity(self, tol: float = IDENTITY_TOL) -> None:
        """rmse^2 = bias^2 + sd^2 (R-1)/R for every method."""
        n = self.completed
        for method, m in self.metrics.items():
            lhs = m["rmse"] ** 2
            rhs = m["bias"] ** 2 + m["sd"] ** 2 * (n - 1) / n
            if abs(lhs - rhs) > tol * max(1.0, lhs):
                raise SimulationError(f"{method}: rmse^2 {lhs!r} disagrees with bias^2 + variance {rhs!r}")


def _master_seed(rng: SeedLike) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2 ** 32))
    return resolve_seed(rng)


def run_replication(population: Population, design: SimulationDesign, master_seed: int, r: int) -> List[Dict[str, Any]]:
    """One sample and every requested estimator; raises on any estimator failure."""
    rng = child_rng(master_seed, r)
    sample = draw_pps_two_stage(population, design, rng)
    records = []
    for method in design.estimators:
        if method == "naive":
            est = naive_mean(sample, design.column, level=design.level)
            mc_se = 0.0
        elif method == "design":
            est = design_mean(sample, design.column, certainty=design.certainty, level=design.level)
            mc_se = 0.0
        else:
            est = estimate_mean(sample, design.column, design.mode, design.n_bb, rng, level=design.level)
            mc_se = est.mc_standard_error()
        records.append({
            "replication": r,
            "method": method,
            "estimate": est.mean,
            "sd": est.sd,
            "ci_lower": est.ci_lower,
            "ci_upper": est.ci_upper,
            "mc_se": mc_se,
        })
    return records


def run_replication_study(population: Population, design: SimulationDesign, rng: SeedLike = None,
                          threads: int = 1) -> MetricsTable:
    """Score the design's estimators over ``design.replications`` samples."""
    truth = population.mean(design.column)
    master = _master_seed(rng)
    n_rep = design.replications
    logger.info(f"Running {n_rep} replications (truth {truth:.4f}, master seed {master}, threads {threads})")

    def attempt(r: int):
        try:
            return r, run_replication(population, design, master, r), None
        except Exception as exc:
            return r, None, exc

    step = max(1, n_rep // 10)
    outcomes = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for done, outcome in enumerate(pool.map(attempt, range(n_rep)), start=1):
                outcomes.append(outcome)
                if done % step == 0:
                    logger.info(f"Replications completed: {done}/{n_rep}")
    else:
        for r in range(n_rep):
            outcomes.append(attempt(r))
            if (r + 1) % step == 0:
                logger.info(f"Replications completed: {r + 1}/{n_rep}")

    failed = [(r, exc) for r, _, exc in outcomes if exc is not None]
    for r, exc in failed:
        logger.warning(f"Replication {r} failed: {exc}")
    if len(failed) > design.failure_tolerance * n_rep:
        raise SimulationError(
            f"{len(failed)} of {n_rep} replications failed (tolerance {design.failure_tolerance:.0%}); "
            f"first failure: {failed[0][1]}"
        )

    details = pd.DataFrame([rec for _, records, _ in outcomes if records for rec in records])
    details["covered"] = [
        lo - 1e-12 * max(1.0, abs(truth)) <= truth <= hi + 1e-12 * max(1.0, abs(truth))
        for lo, hi in zip(details["ci_lower"], details["ci_upper"])
    ]
    metrics = {}
    for method in design.estimators:
        rows = details[details["method"] == method]
        metrics[method] = replicate_metrics(rows["estimate"].to_numpy(), rows["covered"].to_numpy(), truth)

    table = MetricsTable(
        truth=truth,
        replications=n_rep,
        metrics=metrics,
        failures=len(failed),
        level=design.level,
        details=details,
    )
    table.check_identity()
    return table
