from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from .state import BellLabel, JointDensityMatrix


class Collection(str, Enum):
    """Which output waveguides are read out on both chips"""
    FIRST_PAIR = "first_pair"      # waveguides 0, 1
    SECOND_PAIR = "second_pair"    # waveguides 2, 3
    BOTH_PARALLEL = "both_parallel"


class PurificationOutcome(BaseModel):
    """Post-selected result of one purification pass

    post_state is None when no coincidence can occur (success below 1e-12).
    """
    post_state: Optional[JointDensityMatrix] = None
    success_probability: float = Field(..., ge=0.0, le=1.0)
    single_photon_probability: float = Field(0.0, ge=0.0, le=1.0)
    collection: Collection

    model_config = ConfigDict(frozen=True)

    @property
    def has_coincidences(self) -> bool:
        return self.post_state is not None

    @property
    def rejected_probability(self) -> float:
        """Weight of all pairs that produce no coincidence in the collected waveguides"""
        return 1.0 - self.success_probability


class SyndromeRow(BaseModel):
    """One line of the error syndrome table"""
    spatial_bell: BellLabel
    polar_bell: BellLabel
    probability: float = Field(..., ge=0.0, le=1.0)
    coincidence: bool
    post_label: str
    hd_state: str = ""

    model_config = ConfigDict(frozen=True)

    def to_csv_row(self) -> dict:
        return {
            "spatial": self.spatial_bell.symbol,
            "polar": self.polar_bell.symbol,
            "probability [1]": self.probability,
            "coincidence": "Yes" if self.coincidence else "No",
            "post_label": self.post_label,
            "hd_state": self.hd_state,
        }
