"""
Artifact storage for pipeline runs.

Everything a run produces goes into one output directory: deterministic JSON
(sorted keys, NaN/inf written as null, no timestamps), CSV with "\\n" line
endings, and a manifest.json listing the config, seed and outputs.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

MANIFEST_NAME = "manifest.json"


def clean_for_json(value: Any) -> Any:
    """Convert numpy / pandas / pydantic values to JSON-safe builtins, NaN and inf to None."""
    if isinstance(value, BaseModel):
        return clean_for_json(value.model_dump(mode="json"))
    if isinstance(value, dict):
        return {str(k): clean_for_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_for_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean_for_json(v) for v in value.tolist()]
    if isinstance(value, pd.DataFrame):
        return [clean_for_json(r) for r in value.to_dict(orient="records")]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if value is None or isinstance(value, str):
        return value
    if pd.isna(value):
        return None
    return str(value)


def dumps(obj: Any) -> str:
    return json.dumps(clean_for_json(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


class ArtifactStore:
    """Writes a run's outputs into ``out_dir`` and remembers what was written."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: List[str] = []

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _record(self, name: str) -> Path:
        if name not in self.outputs:
            self.outputs.append(name)
        return self.path(name)

    def save_json(self, obj: Any, name: str) -> Path:
        path = self._record(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(dumps(obj))
        return path

    def save_csv(self, df: pd.DataFrame, name: str) -> Path:
        path = self._record(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
        return path

    def register(self, name: str) -> Path:
        """Record a file some other writer placed in the output directory."""
        return self._record(name)

    def save_manifest(self, command: str, config: Dict[str, Any], seed: Optional[int], version: str) -> Path:
        manifest = {
            "command": command,
            "config": config,
            "seed": seed,
            "version": version,
            "outputs": sorted(self.outputs),
        }
        path = self.path(MANIFEST_NAME)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(dumps(manifest))
        return path


def load_json(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
