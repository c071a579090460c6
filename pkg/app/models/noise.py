import math
from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator

PROBABILITY_SUM_TOL = 1e-12


class ErrorKind(str, Enum):
    """Unitary error operations the error generation circuits can apply"""
    NONE = "none"
    BF_POL = "bf_pol"
    BF_SPA = "bf_spa"
    BF_BOTH = "bf_both"
    PF_POL = "pf_pol"
    PF_SPA = "pf_spa"
    PF_BOTH = "pf_both"


class ChannelBranch(BaseModel):
    """One time bin of the error schedule: probability p, error kind on the idler

    signal_kind stays NONE on the chip layout (errors only need one side) but
    can be set for symmetric-channel studies.
    """
    p: float = Field(..., ge=0.0, le=1.0)
    kind: ErrorKind
    signal_kind: ErrorKind = ErrorKind.NONE

    model_config = ConfigDict(frozen=True, extra="forbid")


class ChannelMix(BaseModel):
    """Finite convex mixture of unitary errors, JSON {branches: [{p, kind}]}"""
    branches: List[ChannelBranch] = Field(..., min_length=1)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator('branches')
    @classmethod
    def validate_probabilities(cls, v: List[ChannelBranch]) -> List[ChannelBranch]:
        total = math.fsum(b.p for b in v)
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise ValueError(f'Branch probabilities sum to {total:.15f}, expected 1')
        return v

    @property
    def probabilities(self) -> List[float]:
        return [b.p for b in self.branches]

    @property
    def kinds(self) -> List[ErrorKind]:
        return [b.kind for b in self.branches]


class WernerParam(BaseModel):
    """Weight F of |Phi+> in a Werner state"""
    F: float = Field(..., ge=0.0, le=1.0)

    model_config = ConfigDict(frozen=True)
