"""
Command-line entry point.

Parses a subcommand (estimate, simulate, overlap, sensitivity, synth), merges
defaults, an optional JSON config or run manifest and explicit flags into a
RunConfig, and runs it. Exit codes: 0 success, 1 data or runtime error,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

_BACKEND_DIR = Path(__file__).resolve().parents[1]  # .../src/backend
sys.path.insert(0, str(_BACKEND_DIR))

from pydantic import ValidationError

from pipeline.config import RunConfig
from pipeline.orchestrator import EXIT_USAGE, UsageError, run_command
from utils.logger import get_logger, setup_logger

logger = get_logger(__name__)

# Flags that steer the CLI itself rather than the run.
CLI_ONLY = {"config", "verbose"}


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _shared(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--seed", type=int, help="master seed (generated and printed when omitted)")
    ap.add_argument("--n-bb", dest="n_bb", type=int, help="bootstrap draws")
    ap.add_argument("--mode", choices=["product", "pseudo"], help="scaled weight mode")
    ap.add_argument("--level", type=float, help="credible / confidence level")
    ap.add_argument("--out", type=str, help="output directory")
    ap.add_argument("--config", type=str, help="JSON config file or run manifest")
    ap.add_argument("--threads", type=int, help="worker threads for replications")
    ap.add_argument("--verbose", action="store_true", help="debug logging")
    ap.add_argument("--keep-draws", dest="keep_draws", action="store_true", help="write posterior draws into JSON")


def _target(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--survey", type=str, help="target survey CSV")
    ap.add_argument("--cate-draws", dest="cate_draws", type=str, help="CATE draws CSV (matrix or segment layout)")
    ap.add_argument("--stratum-column", dest="stratum_column", type=str)
    ap.add_argument("--cluster-column", dest="cluster_column", type=str)
    ap.add_argument("--weight-column", dest="weight_column", type=str)
    ap.add_argument("--id-column", dest="id_column", type=str)
    ap.add_argument("--categorical", dest="categorical_columns", type=_str_list, help="comma-separated columns")
    ap.add_argument("--clusters-nested", dest="clusters_nested", action="store_true",
                    help="cluster labels repeat across strata")
    ap.add_argument("--segment-column", dest="segment_column", type=str, help="survey column naming each segment")
    ap.add_argument("--where", type=str, help="subpopulation filter COLUMN=V1,V2")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="run_pipeline",
        description="Generalize source-study effects to a surveyed target population.",
        argument_default=argparse.SUPPRESS,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", argument_default=argparse.SUPPRESS, help="PATE posterior")
    _shared(est)
    _target(est)
    est.add_argument("--y0-draws", dest="y0_draws", type=str, help="draws of E[Y(0)|x] per observation")
    est.add_argument("--y1-draws", dest="y1_draws", type=str, help="draws of E[Y(1)|x] per observation")

    sim = sub.add_parser("simulate", argument_default=argparse.SUPPRESS, help="replication study")
    _shared(sim)
    _synthetic(sim)
    sim.add_argument("--population", type=str, help="population CSV (synthetic when omitted)")
    sim.add_argument("--categorical", dest="categorical_columns", type=_str_list)
    sim.add_argument("--size-column", dest="size_column", type=str)
    sim.add_argument("--replications", type=int)
    sim.add_argument("--clusters-per-stratum", dest="clusters_per_stratum", type=int)
    sim.add_argument("--respondents-per-cluster", dest="respondents_per_cluster", type=int)
    sim.add_argument("--take-all", dest="take_all", action="store_true", help="keep every member of a sampled cluster")
    sim.add_argument("--column", type=str, help="population column whose mean is estimated")
    sim.add_argument("--certainty", action="store_true", help="single-cluster strata add zero variance")
    sim.add_argument("--failure-tolerance", dest="failure_tolerance", type=float)
    sim.add_argument("--population-seed", dest="population_seed", type=int)

    ovl = sub.add_parser("overlap", argument_default=argparse.SUPPRESS, help="overlap diagnostics")
    _shared(ovl)
    _target(ovl)
    ovl.add_argument("--stacked", type=str, help="stacked source/target CSV with compliance scores")
    ovl.add_argument("--group-column", dest="group_column", type=str)
    ovl.add_argument("--compliance-column", dest="compliance_column", type=str)
    ovl.add_argument("--complier-column", dest="complier_column", type=str)
    ovl.add_argument("--membership-column", dest="membership_column", type=str,
                     help="precomputed P(source | X); fits a logistic model when omitted")
    ovl.add_argument("--percentile", type=float)
    ovl.add_argument("--policy", choices=["exclude", "null_impute"])

    sens = sub.add_parser("sensitivity", argument_default=argparse.SUPPRESS, help="sensitivity curves")
    sens.add_argument("analysis", choices=["confounder", "shift"])
    _shared(sens)
    _target(sens)
    sens.add_argument("--kappa", type=float)
    sens.add_argument("--sign", type=int, choices=[-1, 1])
    sens.add_argument("--xi-grid", dest="xi_grid", type=_float_list)
    sens.add_argument("--gamma-grid", dest="gamma_grid", type=_float_list)
    sens.add_argument("--source-effects", dest="source_effects", type=str, help="per-cell source complier effects CSV")
    sens.add_argument("--cell-column", dest="cell_column", type=str)
    sens.add_argument("--effect-column", dest="effect_column", type=str)

    syn = sub.add_parser("synth", argument_default=argparse.SUPPRESS, help="synthetic population CSV")
    _shared(syn)
    _synthetic(syn)
    syn.add_argument("--size-column", dest="size_column", type=str)
    return ap


def _synthetic(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--n-strata", dest="n_strata", type=int)
    ap.add_argument("--clusters", dest="synth_clusters", type=int, help="clusters per stratum in the population")
    ap.add_argument("--cluster-size-min", dest="cluster_size_min", type=int)
    ap.add_argument("--cluster-size-max", dest="cluster_size_max", type=int)
    ap.add_argument("--size-departure-sd", dest="size_departure_sd", type=float)
    ap.add_argument("--non-informative", dest="informative", action="store_false",
                    help="measure of size equals cluster head count")


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Config values from a JSON file; a run manifest contributes its ``config`` block."""
    if not path:
        return {}
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("config"), dict) and "outputs" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise UsageError(f"{path} must hold a JSON object")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    """defaults < config file < explicit flags."""
    flags = {k: v for k, v in vars(args).items() if k not in CLI_ONLY}
    merged = load_config_file(getattr(args, "config", None))
    merged.update(flags)
    return RunConfig(**merged)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger("root", logging.DEBUG if getattr(args, "verbose", False) else None)

    try:
        config = build_config(args)
    except (UsageError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    status = run_command(config)
    if not status["success"]:
        print(f"error: {status['error']}", file=sys.stderr)
    return status["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
