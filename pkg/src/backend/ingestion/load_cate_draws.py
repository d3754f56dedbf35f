"""
Load posterior CATE draws and align them to a survey dataset.

Two layouts are accepted:
  * matrix: first column ``draw_id``, one column per observation id;
  * segment: columns ``segment, draw_id, value``; each observation takes the
    draws of the segment named in one of the dataset's covariate columns.
The segment layout is expanded eagerly into the full D x m matrix.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from models.draws import AlignmentError, CateDraws
from models.survey import SchemaError, SurveyDataset
from utils.logger import get_logger

logger = get_logger(__name__)

SEGMENT_COLUMNS = {"segment", "draw_id", "value"}


def _numeric(frame: pd.DataFrame) -> np.ndarray:
    return frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)


def _read(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"CATE draws file not found: {path}")
    return pd.read_csv(path, dtype={"draw_id": str, "segment": str}, float_precision="round_trip", encoding="utf-8")


def draws_from_matrix_frame(frame: pd.DataFrame, dataset: SurveyDataset) -> CateDraws:
    if frame.columns[0] != "draw_id":
        raise SchemaError(f"draw matrix must start with a 'draw_id' column, found {frame.columns[0]!r}")
    obs_cols = [str(c) for c in frame.columns[1:]]
    frame = frame.set_axis(["draw_id"] + obs_cols, axis=1)
    expected = list(dataset.ids)
    if len(obs_cols) != len(expected) or set(obs_cols) != set(expected):
        missing = sorted(set(expected) - set(obs_cols))[:5]
        extra = sorted(set(obs_cols) - set(expected))[:5]
        raise AlignmentError(
            f"draw matrix has {len(obs_cols)} observation columns, dataset has {len(expected)} observations"
            + (f"; missing ids {missing}" if missing else "")
            + (f"; unknown ids {extra}" if extra else "")
        )
    return CateDraws(draws=_numeric(frame[expected]), ids=dataset.ids)


def draws_from_segment_frame(frame: pd.DataFrame, dataset: SurveyDataset, segment_column: str) -> CateDraws:
    if segment_column not in dataset.covariates.columns:
        raise SchemaError(f"dataset has no segment column {segment_column!r}")
    frame = frame.copy()
    frame["value"] = pd.to_numeric(frame["value"], errors="coerce")
    if frame.duplicated(["segment", "draw_id"]).any():
        raise AlignmentError("segment draws file repeats a (segment, draw_id) pair")
    wide = frame.pivot(index="draw_id", columns="segment", values="value")
    draw_order = pd.unique(frame["draw_id"])
    segment_order = list(pd.unique(frame["segment"]))
    wide = wide.loc[draw_order, segment_order]
    if wide.isna().any().any():
        short = [s for s in segment_order if wide[s].isna().any()]
        raise AlignmentError(f"segments {short} do not cover every draw_id")

    labels = dataset.labels(segment_column)
    index = {s: i for i, s in enumerate(segment_order)}
    unknown = sorted({lab for lab in labels if lab not in index})
    if unknown:
        raise AlignmentError(f"observations reference segments with no draws: {unknown}")
    columns = np.asarray([index[lab] for lab in labels], dtype=np.int64)
    return CateDraws(draws=wide.to_numpy(dtype=float)[:, columns], ids=dataset.ids)


def load_cate_draws(path, dataset: SurveyDataset, segment_column: Optional[str] = None) -> CateDraws:
    """Read a draws file in either layout; result columns follow dataset row order."""
    path = Path(path)
    frame = _read(path)
    if SEGMENT_COLUMNS.issubset(frame.columns) and len(frame.columns) == len(SEGMENT_COLUMNS):
        if not segment_column:
            raise SchemaError(f"{path} is a segment lookup file; a dataset segment column is required")
        draws = draws_from_segment_frame(frame, dataset, segment_column)
        layout = "segment"
    else:
        draws = draws_from_matrix_frame(frame, dataset)
        layout = "matrix"
    for warning in draws.warnings:
        logger.warning(f"{path}: {warning}")
    logger.info(f"Loaded {draws.n_draws} CATE draws ({layout} layout) for {draws.n_obs} observations")
    return draws


def write_cate_matrix_csv(draws: CateDraws, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(draws.draws, columns=list(draws.ids))
    frame.insert(0, "draw_id", [str(i + 1) for i in range(draws.n_draws)])
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
