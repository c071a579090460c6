from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .analysis import ChshSettings, CountingMode
from .counting import DetectionModel
from .pll import PllConfig
from .purification import Collection


class ExperimentKind(str, Enum):
    DISTRIBUTE_BASELINE = "distribute_baseline"
    BF_PURIFY = "bf_purify"
    PF_PURIFY = "pf_purify"
    CHSH_SCAN = "chsh_scan"
    WERNER_CURVE = "werner_curve"
    SYNDROME_TABLE = "syndrome_table"
    SOURCE_METRICS = "source_metrics"
    PLL_LOCK = "pll_lock"
    PURIFY_SWEEP = "purify_sweep"
    BF_CURVE = "bf_curve"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class FidelityGrid(BaseModel):
    """Evenly spaced grid of fidelities, endpoints included"""
    start: float = Field(0.25, ge=0.0, le=1.0)
    stop: float = Field(1.0, ge=0.0, le=1.0)
    num: int = Field(301, ge=2, le=100001)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode='after')
    def check_order(self) -> "FidelityGrid":
        if self.stop <= self.start:
            raise ValueError(f'Grid stop {self.stop} must exceed start {self.start}')
        return self


class ExperimentParameters(BaseModel):
    """Parameter map of a configured experiment

    Each experiment reads the subset it needs; REQUIRED_PARAMETERS lists the ones
    with no sensible default.
    """
    p: Optional[float] = Field(None, ge=0.0, le=1.0)
    p_values: Optional[List[float]] = None
    F: Optional[float] = Field(None, ge=0.0, le=1.0)
    f_grid: Optional[FidelityGrid] = None
    collection: Collection = Collection.FIRST_PAIR
    baseline_polarization: Optional[float] = Field(None, ge=0.25, le=1.0)
    baseline_spatial: Optional[float] = Field(None, ge=0.25, le=1.0)
    pairs_per_setting: Optional[float] = Field(None, gt=0.0)
    counting_mode: CountingMode = CountingMode.SEQUENTIAL
    resamples: int = Field(200, ge=100)
    detection: Optional[DetectionModel] = None
    chsh: ChshSettings = Field(default_factory=ChshSettings)
    car: Optional[float] = Field(None, gt=1.0)
    g2_raw: Optional[float] = Field(None, gt=1.0, le=2.0)
    adjacent_leakage: float = Field(0.0904, ge=0.0, lt=0.5)
    pll: PllConfig = Field(default_factory=PllConfig)
    duration: Optional[float] = Field(None, gt=0.0)
    seeds: int = Field(1, ge=1, le=1000)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode='after')
    def check_p_values(self) -> "ExperimentParameters":
        if self.p_values is not None:
            if not self.p_values:
                raise ValueError('p_values must not be empty')
            for p in self.p_values:
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f'Error rate {p} outside [0, 1]')
        return self


REQUIRED_PARAMETERS: Dict[ExperimentKind, List[str]] = {
    ExperimentKind.DISTRIBUTE_BASELINE: [],
    ExperimentKind.BF_PURIFY: ["p"],
    ExperimentKind.PF_PURIFY: ["p"],
    ExperimentKind.CHSH_SCAN: ["p"],
    ExperimentKind.WERNER_CURVE: ["f_grid"],
    ExperimentKind.SYNDROME_TABLE: ["F"],
    ExperimentKind.SOURCE_METRICS: ["car", "g2_raw"],
    ExperimentKind.PLL_LOCK: ["duration"],
    ExperimentKind.PURIFY_SWEEP: ["p_values"],
    ExperimentKind.BF_CURVE: [],
}


class ExperimentConfig(BaseModel):
    """A single JSON experiment document: {experiment, seed, parameters}"""
    experiment: ExperimentKind
    seed: Optional[int] = Field(None, ge=0)
    parameters: ExperimentParameters = Field(default_factory=ExperimentParameters)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode='after')
    def check_required(self) -> "ExperimentConfig":
        missing = [
            name for name in REQUIRED_PARAMETERS[self.experiment]
            if getattr(self.parameters, name) is None
        ]
        if missing:
            raise ValueError(f'Experiment {self.experiment.value} requires parameters: {", ".join(missing)}')
        return self


class ExperimentReport(BaseModel):
    """Deterministic payload of one experiment run

    tables hold row dictionaries keyed by column headers with units; the
    wall-clock timestamp lives in ReportMetadata so payloads stay reproducible.
    """
    experiment: ExperimentKind
    version: str
    seed: int
    config: Dict[str, Any]
    results: Dict[str, Any] = Field(default_factory=dict)
    tables: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)
    provenance: List[str] = Field(default_factory=list)


class ReportMetadata(BaseModel):
    experiment: ExperimentKind
    created_at: datetime
    files: List[str] = Field(default_factory=list)
