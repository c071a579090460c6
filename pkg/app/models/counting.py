from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class DetectionModel(BaseModel):
    """Pair source and detector chain of one coincidence measurement

    Efficiencies are linear probabilities (see CountingService.db_to_linear);
    multipair_xi scales accidental coincidences from double-pair emission.
    """
    pair_rate: float = Field(1.0e5, ge=0.0)                 # Hz
    signal_efficiency: float = Field(1.0, ge=0.0, le=1.0)
    idler_efficiency: float = Field(1.0, ge=0.0, le=1.0)
    dark_rate: float = Field(0.0, ge=0.0)                   # Hz per detector
    detector_efficiency: float = Field(1.0, ge=0.0, le=1.0)
    coincidence_window: float = Field(50e-12, gt=0.0)       # s
    rep_rate: float = Field(9.95e9, gt=0.0)                 # Hz
    multipair_xi: float = Field(0.0, ge=0.0, lt=1.0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode='after')
    def check_window(self) -> "DetectionModel":
        if self.coincidence_window >= 1.0 / self.rep_rate:
            raise ValueError(
                f'Coincidence window {self.coincidence_window:.3e} s must be shorter than the '
                f'pulse period {1.0 / self.rep_rate:.3e} s'
            )
        if self.pair_rate > self.rep_rate:
            raise ValueError('Pair rate cannot exceed the pump repetition rate')
        return self

    @property
    def mean_pairs_per_pulse(self) -> float:
        return self.pair_rate / self.rep_rate

    @property
    def signal_detection(self) -> float:
        return self.signal_efficiency * self.detector_efficiency

    @property
    def idler_detection(self) -> float:
        return self.idler_efficiency * self.detector_efficiency

    @property
    def eta(self) -> float:
        """Per-arm detection efficiency (geometric mean of the two arms)"""
        return (self.signal_detection * self.idler_detection) ** 0.5


class SourceParams(BaseModel):
    xi: float = Field(..., ge=0.0, lt=1.0)
    schmidt_K: float = Field(1.0, ge=1.0)

    model_config = ConfigDict(frozen=True)

    @property
    def purity(self) -> float:
        return 1.0 / self.schmidt_K


class G2Histogram(BaseModel):
    """Coincidence peak areas of an unheralded g2 measurement, central peak at center_index"""
    peaks: List[float] = Field(..., min_length=5)
    center_index: int

    model_config = ConfigDict(frozen=True)

    @model_validator(mode='after')
    def check_center(self) -> "G2Histogram":
        if not 1 <= self.center_index <= len(self.peaks) - 2:
            raise ValueError('Central peak needs a neighbour on each side')
        return self


class SourceMetrics(BaseModel):
    car: float
    eta: float
    xi: float
    xi_squared: float
    g2_raw: float
    purity_raw: float
    schmidt_K_raw: float
    g2_corrected: float
    purity_corrected: float
    notes: List[str] = Field(default_factory=list)
