"""
Pipeline orchestrator.

One function per CLI subcommand. Each loads its inputs, runs the analysis,
writes its artifacts plus a manifest into the output directory and returns a
status dict; failures are caught and reported in the dict with the exit code
the CLI should use.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from bootstrap.pate import estimate_outcome_table, estimate_pate, segment_shares
from ingestion.load_cate_draws import load_cate_draws
from ingestion.load_survey import (
    filter_mask,
    load_population_csv,
    load_survey_csv,
    parse_covariates,
    population_schema,
    read_csv_strings,
    write_population_csv,
)
from ingestion.synthetic_population import (
    PopulationSpec,
    SpecError,
    categorical_covariates,
    generate_synthetic_population,
    informative_spec,
)
from models.draws import CateDraws
from models.survey import SchemaError, SurveyDataset, SurveyValidationError, ValidationReport
from overlap.membership_model import OverlapError, fit_membership_model, membership_from_probabilities
from overlap.selection_score import (
    SOURCE,
    TARGET,
    SupportFlags,
    flag_low_support,
    selection_score,
    standardize_scores,
    write_scores_csv,
)
from overlap.support_policy import support_report
from sensitivity.confounder import ConfounderSpec, pate_confounder_curve
from sensitivity.curves import first_crossing
from sensitivity.distribution_shift import ShiftSpec, load_source_effects, pate_shift_bounds
from simulation.pps_sampling import SimulationDesign
from simulation.replication import run_replication_study
from utils.logger import get_logger
from utils.rng import resolve_seed
from utils.storage import ArtifactStore

from .config import PACKAGE_VERSION, PipelineConfig, RunConfig

logger = get_logger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
TRUE_LABELS = {"1", "true", "yes", "t", "y"}


class UsageError(ValueError):
    """Raised for invalid invocations: missing inputs, malformed flags."""


USAGE_ERRORS = (UsageError, FileNotFoundError, ValidationError, SpecError)

REQUIRED_INPUTS = {
    "estimate": ("survey", "cate_draws"),
    "overlap": ("survey", "cate_draws", "stacked"),
    "sensitivity": ("survey", "cate_draws"),
    "simulate": (),
    "synth": (),
}


def parse_where(where: Optional[str]) -> Optional[Tuple[str, List[str]]]:
    """'urban=1' or 'state=A,B' -> (column, values)."""
    if not where:
        return None
    column, sep, values = where.partition("=")
    labels = [v.strip() for v in values.split(",") if v.strip()]
    if not sep or not column.strip() or not labels:
        raise UsageError(f"--where expects COLUMN=V1[,V2...], got {where!r}")
    return column.strip(), labels


def check_inputs(config: RunConfig) -> None:
    """Fail fast on missing required inputs and unreadable paths."""
    if config.command == "sensitivity" and config.analysis is None:
        raise UsageError("sensitivity needs an analysis: confounder or shift")
    required = list(REQUIRED_INPUTS[config.command])
    if config.command == "sensitivity" and config.analysis == "shift":
        required.append("source_effects")
    for name in required:
        if not getattr(config, name):
            raise UsageError(f"{config.command} requires --{name.replace('_', '-')}")
    if bool(config.y0_draws) != bool(config.y1_draws):
        raise UsageError("--y0-draws and --y1-draws must be given together")
    for name in ("survey", "cate_draws", "y0_draws", "y1_draws", "population", "stacked", "source_effects"):
        value = getattr(config, name)
        if value and not Path(value).exists():
            raise UsageError(f"input file not found: {value}")
    parse_where(config.where)


def load_target(config: RunConfig, extra_draws: Tuple[str, ...] = ()) -> Tuple[SurveyDataset, List[CateDraws]]:
    """Survey plus aligned draw matrices (CATE first), restricted by ``--where`` when given."""
    dataset = load_survey_csv(config.survey, config.survey_schema())
    draws = [load_cate_draws(path, dataset, config.segment_column) for path in (config.cate_draws, *extra_draws)]
    where = parse_where(config.where)
    if where is not None:
        column, values = where
        mask = filter_mask(dataset, column, values)
        if not mask.any():
            raise SurveyValidationError(ValidationReport(errors=[f"no observations with {column} in {values}"]))
        dataset, draws = dataset.subset(mask), [d.subset(mask) for d in draws]
        logger.info(f"Restricted to {column} in {values}: {dataset.n_obs} observations")
    return dataset, draws


def _dataset_header(dataset: SurveyDataset, config: RunConfig, seed: int) -> Dict[str, Any]:
    return {
        "seed": seed,
        "mode": config.mode.value,
        "n_bb": config.bootstrap_draws(),
        "level": config.level,
        "where": config.where,
        "n_obs": dataset.n_obs,
        "n_clusters": dataset.n_clusters,
        "n_strata": dataset.n_strata,
    }


def _draws_frame(values: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"draw": np.arange(1, values.size + 1), "value": values})


def _run(config: RunConfig, body: Callable[[RunConfig, int, ArtifactStore], Dict[str, Any]]) -> Dict[str, Any]:
    status: Dict[str, Any] = {
        "command": config.command,
        "success": False,
        "error": None,
        "exit_code": EXIT_FAILURE,
        "seed": None,
        "out": None,
        "outputs": [],
    }
    try:
        check_inputs(config)
        config = config.resolved()
        seed = resolve_seed(config.seed)
        if config.seed is None:
            print(f"seed: {seed}")
        # manifest records the concrete draw count, not the env default it came from
        config = config.model_copy(update={"seed": seed, "n_bb": config.bootstrap_draws()})
        status["seed"] = seed
        status["out"] = config.out

        PipelineConfig.ensure_directories(Path(config.out))
        store = ArtifactStore(Path(config.out))
        status["result"] = body(config, seed, store)
        store.save_manifest(config.command, config.echo(), seed, PACKAGE_VERSION)
        status["outputs"] = sorted(store.outputs)
        status["success"] = True
        status["exit_code"] = EXIT_OK
        logger.info(f"{config.command} finished; {len(store.outputs)} output(s) in {config.out}")
    except USAGE_ERRORS as e:
        status["error"] = str(e)
        status["exit_code"] = EXIT_USAGE
        logger.error(f"{config.command}: {e}")
    except Exception as e:
        status["error"] = f"{type(e).__name__}: {e}"
        logger.error(f"{config.command} failed: {status['error']}")
    return status


def _estimate(config: RunConfig, seed: int, store: ArtifactStore) -> Dict[str, Any]:
    extra = (config.y0_draws, config.y1_draws) if config.y0_draws else ()
    dataset, draws = load_target(config, extra)
    cate = draws[0]
    n_bb = config.bootstrap_draws()
    pate = estimate_pate(dataset, cate, config.mode, n_bb, seed, config.level)

    report = _dataset_header(dataset, config, seed)
    report["cate_draws"] = cate.n_draws
    report["pate"] = pate.to_dict(keep_draws=config.keep_draws)
    store.save_csv(_draws_frame(pate.draws), "pate_draws.csv")

    if extra:
        y0, y1 = draws[1:]
        table = estimate_outcome_table(dataset, y0, y1, config.mode, n_bb, seed, config.level)
        report["outcomes"] = {name: s.to_dict() for name, s in table.items()}
        store.save_csv(
            pd.DataFrame([{"quantity": name, **s.to_dict()} for name, s in table.items()]),
            "outcome_table.csv",
        )

    if config.segment_column:
        shares = segment_shares(dataset, config.segment_column, config.mode, n_bb, seed, config.level)
        store.save_csv(
            pd.DataFrame([{"segment": label, **s.to_dict()} for label, s in shares.items()]),
            "segment_shares.csv",
        )

    store.save_json(report, "pate.json")
    logger.info(f"PATE {pate.mean:.4f} (sd {pate.sd:.4f})")
    return {"pate": pate.to_dict()}


def cmd_estimate(config: RunConfig) -> Dict[str, Any]:
    """PATE posterior for a survey and its aligned CATE draws."""
    return _run(config, _estimate)


def simulation_population(config: RunConfig):
    if config.population:
        schema = population_schema(config.categorical_columns)
        return load_population_csv(config.population, schema, config.size_column)
    spec = _population_spec(config, config.population_seed)
    return generate_synthetic_population(spec)


def _simulate(config: RunConfig, seed: int, store: ArtifactStore) -> Dict[str, Any]:
    population = simulation_population(config)
    design = SimulationDesign(
        clusters_per_stratum=config.clusters_per_stratum,
        respondents_per_cluster=None if config.take_all else config.respondents_per_cluster,
        replications=config.replications,
        level=config.level,
        column=config.column,
        n_bb=config.bootstrap_draws(),
        mode=config.mode,
        certainty=config.certainty,
        failure_tolerance=config.failure_tolerance,
    )
    table = run_replication_study(population, design, seed, threads=config.threads)

    store.save_csv(table.to_frame(), "metrics.csv")
    store.save_csv(table.details, "replications.csv")
    report = {
        "seed": seed,
        "column": config.column,
        "population_units": population.n_units,
        "population_sd": population.sd(config.column),
        **table.to_dict(),
    }
    store.save_json(report, "metrics.json")
    return table.to_dict()


def cmd_simulate(config: RunConfig) -> Dict[str, Any]:
    """Replication study of the naive, design-based and bootstrap estimators."""
    return _run(config, _simulate)


def _is_true(values: pd.Series) -> np.ndarray:
    return values.fillna("").astype(str).str.strip().str.lower().isin(TRUE_LABELS).to_numpy()


def stacked_scores(config: RunConfig, frame: pd.DataFrame):
    """Selection scores for every stacked unit plus the source-complier mask."""
    id_column = config.id_column or "id"
    required = [id_column, config.group_column, config.compliance_column]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError(f"{config.stacked}: missing column(s) {', '.join(missing)}")
    groups = frame[config.group_column].fillna("").str.strip().str.lower()
    unknown = sorted(set(groups) - {SOURCE, TARGET})
    if unknown:
        raise OverlapError(f"{config.group_column} must be {SOURCE!r} or {TARGET!r}; found {unknown}")

    compliance = pd.to_numeric(frame[config.compliance_column], errors="coerce").to_numpy(dtype=float)
    if config.membership_column:
        if config.membership_column not in frame.columns:
            raise SchemaError(f"{config.stacked}: missing membership column {config.membership_column!r}")
        membership = membership_from_probabilities(pd.to_numeric(frame[config.membership_column], errors="coerce"))
    else:
        taken = {id_column, config.group_column, config.compliance_column, config.complier_column}
        columns = [c for c in frame.columns if c not in taken]
        covariates = parse_covariates(frame, columns, config.categorical_columns)
        categorical = [c for c in columns if covariates[c].dtype == object]
        membership = fit_membership_model(covariates, (groups == TARGET).astype(int).to_numpy(),
                                          categorical=categorical)

    scores = selection_score(compliance, membership.probabilities, ids=frame[id_column].tolist(), tags=groups.tolist(),
                             clamp=PipelineConfig.PROBABILITY_CLAMP)
    source = (groups == SOURCE).to_numpy()
    if config.complier_column in frame.columns:
        compliers = source & _is_true(frame[config.complier_column])
    else:
        compliers = source
    return standardize_scores(scores, compliers), compliers


def align_flags(flags: SupportFlags, scores, dataset: SurveyDataset) -> SupportFlags:
    """Reorder target flags to the survey's row order."""
    index = {pos: k for k, pos in enumerate(flags.positions.tolist())}
    target_pos = {
        uid: pos for pos, (uid, tag) in enumerate(zip(scores.ids.tolist(), scores.tags.tolist())) if tag == TARGET
    }
    order = np.asarray([index[target_pos[uid]] for uid in dataset.ids.tolist()], dtype=np.int64)
    return replace(flags, ids=flags.ids[order], flagged=flags.flagged[order], weights=flags.weights[order],
                   positions=flags.positions[order])


def _overlap(config: RunConfig, seed: int, store: ArtifactStore) -> Dict[str, Any]:
    dataset, (cate,) = load_target(config)
    frame = read_csv_strings(Path(config.stacked))
    scores, compliers = stacked_scores(config, frame)

    target_ids = {uid for uid, tag in zip(scores.ids.tolist(), scores.tags.tolist()) if tag == TARGET}
    missing = [uid for uid in dataset.ids.tolist() if uid not in target_ids]
    if missing:
        raise OverlapError(f"{len(missing)} survey observations have no target row in the stacked file, e.g. {missing[:5]}")
    weight_of = dict(zip(dataset.ids.tolist(), dataset.weights.tolist()))
    targets = scores.mask(TARGET) & np.isin(scores.ids, dataset.ids)
    flags = flag_low_support(scores, compliers, config.percentile, targets=targets,
                             target_weights=[weight_of[uid] for uid in scores.ids[targets].tolist()])
    write_scores_csv(scores, flags, store.register("scores.csv"))

    row = support_report(dataset, cate, align_flags(flags, scores, dataset), config.mode, config.bootstrap_draws(),
                         seed, config.level)
    variants = {"pate": row["pate"], "pate_excluding": row["pate_excluding"],
                "pate_null_imputed": row["pate_null_imputed"]}
    table = {"where": config.where, "flagged_proportion": row["flagged_proportion"], "n_flagged": row["n_flagged"]}
    for name, summary in variants.items():
        table[f"{name}_mean"] = summary.mean if summary is not None else None
        table[f"{name}_sd"] = summary.sd if summary is not None else None
    store.save_csv(pd.DataFrame([table]), "support_report.csv")

    selected = "pate_excluding" if config.policy == "exclude" else "pate_null_imputed"
    report = {
        **_dataset_header(dataset, config, seed),
        "threshold": row["threshold"],
        "percentile": config.percentile,
        "complier_mean": scores.complier_mean,
        "complier_sd": scores.complier_sd,
        "flagged_proportion": row["flagged_proportion"],
        "n_flagged": row["n_flagged"],
        "policy": config.policy,
        "selected": selected,
        **{name: s.to_dict() if s is not None else None for name, s in variants.items()},
    }
    store.save_json(report, "support_report.json")
    return {"flagged_proportion": row["flagged_proportion"], "threshold": row["threshold"]}


def cmd_overlap(config: RunConfig) -> Dict[str, Any]:
    """Selection scores, low-support flags and the PATE under each support policy."""
    return _run(config, _overlap)


def _sensitivity(config: RunConfig, seed: int, store: ArtifactStore) -> Dict[str, Any]:
    dataset, (cate,) = load_target(config)
    n_bb = config.bootstrap_draws()
    if config.analysis == "confounder":
        spec = ConfounderSpec(kappa=config.kappa, sign=config.sign, xi_grid=config.xi_grid)
        curve = pate_confounder_curve(dataset, cate, spec, config.mode, n_bb, seed, config.level)
        crossing = first_crossing(curve)
        extra = {"kappa": spec.kappa, "sign": spec.sign}
    else:
        effects = load_source_effects(config.source_effects, config.effect_column, config.effect_cell_column,
                                      config.effect_weight_column)
        spec = ShiftSpec(gamma_grid=config.gamma_grid, cell_column=config.cell_column)
        curve = pate_shift_bounds(dataset, cate, effects, spec, config.mode, n_bb, seed, config.level)
        crossing = first_crossing(curve, bound="lower")
        extra = {"cell_column": config.cell_column, "cells": sorted(effects.cells)}

    name = f"{config.analysis}_curve.csv"
    curve.to_csv(store.register(name))
    report = {
        **_dataset_header(dataset, config, seed),
        "analysis": config.analysis,
        "baseline": curve.baseline.to_dict() if curve.baseline is not None else None,
        "first_crossing": crossing,
        "grid": curve.parameters.tolist(),
        **extra,
    }
    store.save_json(report, "sensitivity.json")
    logger.info(f"{config.analysis} sweep: interval first reaches zero at {crossing}")
    return {"first_crossing": crossing}


def cmd_sensitivity(config: RunConfig) -> Dict[str, Any]:
    """Confounder-prevalence sweep or distribution-shift bounds over a grid."""
    return _run(config, _sensitivity)


def _population_spec(config: RunConfig, seed: int) -> Dict[str, Any]:
    base = informative_spec(seed=seed) if config.informative else PopulationSpec(seed=seed)
    params = base.model_dump()
    params.update({
        "n_strata": config.n_strata,
        "clusters_per_stratum": config.synth_clusters,
        "cluster_size_range": (config.cluster_size_min, config.cluster_size_max),
    })
    if config.informative:
        params["size_departure_sd"] = config.size_departure_sd
    return params


def _synth(config: RunConfig, seed: int, store: ArtifactStore) -> Dict[str, Any]:
    params = _population_spec(config, seed)
    population = generate_synthetic_population(params)
    schema = population_schema(categorical_covariates(PopulationSpec(**params)))
    write_population_csv(population, store.register("population.csv"), schema, config.size_column)
    summary = {
        "seed": seed,
        "n_units": population.n_units,
        "n_clusters": population.units.n_clusters,
        "n_strata": population.units.n_strata,
        "age_mean": population.mean("age"),
        "age_sd": population.sd("age"),
    }
    store.save_json(summary, "population.json")
    return summary


def cmd_synth(config: RunConfig) -> Dict[str, Any]:
    """Write a synthetic population CSV."""
    return _run(config, _synth)


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "overlap": cmd_overlap,
    "sensitivity": cmd_sensitivity,
    "synth": cmd_synth,
}


def run_command(config: RunConfig) -> Dict[str, Any]:
    return COMMANDS[config.command](config)
