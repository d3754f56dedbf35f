"""
Pipeline configuration settings.

PipelineConfig holds environment-overridable defaults; RunConfig is the
validated configuration of one CLI invocation (defaults < JSON config file <
explicit flags).
"""

import os
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

from models.survey import SurveySchema
from models.weights import ScaledWeightMode

try:
    load_dotenv()
except Exception:
    pass

PACKAGE_VERSION = "0.1.0"

# Base directories
BASE_DIR = Path(__file__).parent.parent.parent.parent
DATA_DIR = BASE_DIR / "data"
EXAMPLE_DIR = DATA_DIR / "example"
OUTPUT_DIR = Path(os.getenv("SURVEYGEN_OUTPUT_DIR", str(BASE_DIR / "output")))


class PipelineConfig:
    """Configuration defaults for the estimation, simulation and sensitivity pipeline."""

    BASE_DIR = BASE_DIR
    DATA_DIR = DATA_DIR
    EXAMPLE_DIR = EXAMPLE_DIR
    OUTPUT_DIR = OUTPUT_DIR

    # Bootstrap
    N_BB = int(os.getenv("SURVEYGEN_N_BB", 1000))
    LEVEL = float(os.getenv("SURVEYGEN_LEVEL", 0.95))
    MODE = os.getenv("SURVEYGEN_MODE", "product")

    # Simulation
    SIM_N_BB = int(os.getenv("SURVEYGEN_SIM_N_BB", 500))
    SIM_REPLICATIONS = int(os.getenv("SURVEYGEN_SIM_REPLICATIONS", 500))
    SIM_CLUSTERS_PER_STRATUM = 20
    SIM_RESPONDENTS_PER_CLUSTER = 28
    FAILURE_TOLERANCE = 0.01
    THREADS = int(os.getenv("SURVEYGEN_THREADS", 1))

    # Synthetic population
    SYNTH_STRATA = 6
    SYNTH_CLUSTERS_PER_STRATUM = 60
    SYNTH_CLUSTER_SIZE = (26, 40)
    SYNTH_SIZE_DEPARTURE_SD = 0.5

    # Overlap
    PROBABILITY_CLAMP = 1e-6
    SUPPORT_PERCENTILE = 0.05

    # Sensitivity
    KAPPA = 0.66
    KAPPA_SIGN = -1
    XI_GRID = [round(0.1 * i, 10) for i in range(11)]
    GAMMA_MAX = 8.0
    GAMMA_POINTS = 15

    @classmethod
    def gamma_grid(cls) -> List[float]:
        return np.geomspace(1.0, cls.GAMMA_MAX, cls.GAMMA_POINTS).tolist()

    @classmethod
    def ensure_directories(cls, out_dir: Optional[Path] = None):
        """Create the output directory if it doesn't exist."""
        Path(out_dir or cls.OUTPUT_DIR).mkdir(parents=True, exist_ok=True)


Command = Literal["estimate", "simulate", "overlap", "sensitivity", "synth"]
PATH_FIELDS = ("survey", "cate_draws", "y0_draws", "y1_draws", "population", "stacked", "source_effects")


class RunConfig(BaseModel):
    command: Command
    analysis: Optional[Literal["confounder", "shift"]] = None

    # Inputs
    survey: Optional[str] = None
    cate_draws: Optional[str] = None
    y0_draws: Optional[str] = None
    y1_draws: Optional[str] = None
    population: Optional[str] = None
    stacked: Optional[str] = None
    source_effects: Optional[str] = None

    # Survey schema
    stratum_column: str = "stratum"
    cluster_column: str = "cluster"
    weight_column: str = "weight"
    id_column: Optional[str] = "id"
    outcome_column: Optional[str] = None
    categorical_columns: List[str] = Field(default_factory=list)
    clusters_nested: bool = False
    segment_column: Optional[str] = None
    where: Optional[str] = None

    # Shared
    mode: ScaledWeightMode = ScaledWeightMode.parse(PipelineConfig.MODE)
    n_bb: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None
    level: float = Field(PipelineConfig.LEVEL, gt=0, lt=1)
    out: str = str(PipelineConfig.OUTPUT_DIR)
    threads: int = Field(PipelineConfig.THREADS, ge=1)
    keep_draws: bool = False

    # Overlap
    group_column: str = "group"
    compliance_column: str = "compliance_score"
    complier_column: str = "complier"
    membership_column: Optional[str] = None
    percentile: float = Field(PipelineConfig.SUPPORT_PERCENTILE, ge=0, le=1)
    policy: Literal["exclude", "null_impute"] = "null_impute"

    # Sensitivity
    kappa: float = PipelineConfig.KAPPA
    sign: Literal[-1, 1] = PipelineConfig.KAPPA_SIGN
    xi_grid: List[float] = Field(default_factory=lambda: list(PipelineConfig.XI_GRID))
    gamma_grid: List[float] = Field(default_factory=PipelineConfig.gamma_grid)
    cell_column: Optional[str] = None
    effect_column: str = "effect"
    effect_cell_column: str = "cell"
    effect_weight_column: str = "weight"

    # Simulation
    replications: int = Field(PipelineConfig.SIM_REPLICATIONS, ge=1)
    clusters_per_stratum: int = Field(PipelineConfig.SIM_CLUSTERS_PER_STRATUM, ge=1)
    respondents_per_cluster: int = Field(PipelineConfig.SIM_RESPONDENTS_PER_CLUSTER, ge=1)
    take_all: bool = False
    column: str = "age"
    certainty: bool = False
    failure_tolerance: float = Field(PipelineConfig.FAILURE_TOLERANCE, ge=0, le=1)
    size_column: str = "measure_of_size"

    # Synthetic population
    n_strata: int = Field(PipelineConfig.SYNTH_STRATA, ge=1)
    synth_clusters: int = Field(PipelineConfig.SYNTH_CLUSTERS_PER_STRATUM, ge=1)
    cluster_size_min: int = PipelineConfig.SYNTH_CLUSTER_SIZE[0]
    cluster_size_max: int = PipelineConfig.SYNTH_CLUSTER_SIZE[1]
    size_departure_sd: float = Field(PipelineConfig.SYNTH_SIZE_DEPARTURE_SD, ge=0)
    informative: bool = True
    population_seed: int = 7

    @field_validator("mode", mode="before")
    @classmethod
    def _parse_mode(cls, v):
        return ScaledWeightMode.parse(v)

    @field_validator("kappa")
    @classmethod
    def _finite_kappa(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError(f"kappa must be finite, got {v!r}")
        return v

    def survey_schema(self) -> SurveySchema:
        return SurveySchema(
            stratum_column=self.stratum_column,
            cluster_column=self.cluster_column,
            weight_column=self.weight_column,
            id_column=self.id_column,
            outcome_column=self.outcome_column,
            categorical_columns=self.categorical_columns,
            clusters_nested=self.clusters_nested,
        )

    def bootstrap_draws(self) -> int:
        if self.n_bb is not None:
            return self.n_bb
        return PipelineConfig.SIM_N_BB if self.command == "simulate" else PipelineConfig.N_BB

    def resolved(self) -> "RunConfig":
        """Copy with every input path made absolute."""
        updates = {name: str(Path(getattr(self, name)).resolve()) for name in PATH_FIELDS if getattr(self, name)}
        updates["out"] = str(Path(self.out).resolve())
        return self.model_copy(update=updates)

    def echo(self) -> dict:
        return self.model_dump(mode="json")
