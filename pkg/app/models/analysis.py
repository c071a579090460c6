import math
from enum import Enum
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class CountingMode(str, Enum):
    """How the 16 coincidence numbers are collected

    SEQUENTIAL: one detector per photon, one projector per setting (16 settings).
    PARALLEL: both MZI outputs detected, four outcomes per setting (9 settings).
    """
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


class PolarizationSetting(BaseModel):
    """Single-qubit projector |b> = cos(alpha)|H> + e^{i beta} sin(alpha)|V>, angles in radians"""
    label: str
    alpha: float
    beta: float = 0.0

    model_config = ConfigDict(frozen=True)

    @property
    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.alpha), np.exp(1j * self.beta) * math.sin(self.alpha)])

    @classmethod
    def linear(cls, degrees: float) -> "PolarizationSetting":
        """Linear polarizer at the given angle"""
        return cls(label=f"{degrees:g}", alpha=math.radians(degrees))


class MeasurementSetting(BaseModel):
    """Joint two-photon projector |b_signal> (x) |b_idler>"""
    label: str
    signal: PolarizationSetting
    idler: PolarizationSetting

    model_config = ConfigDict(frozen=True)

    @property
    def vector(self) -> np.ndarray:
        return np.kron(self.signal.vector, self.idler.vector)

    def projector(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())


class TomographyBasisSet(BaseModel):
    """Sixteen two-photon projectors; the first four must sum to the identity"""
    name: str
    settings: List[MeasurementSetting] = Field(..., min_length=16, max_length=16)

    model_config = ConfigDict(frozen=True)

    @property
    def labels(self) -> List[str]:
        return [s.label for s in self.settings]

    @model_validator(mode='after')
    def check_normalization_block(self) -> "TomographyBasisSet":
        total = sum(s.projector() for s in self.settings[:4])
        if not np.allclose(total, np.eye(4), atol=1e-10):
            raise ValueError('The first four projectors must form a complete basis for count normalization')
        return self


class CoincidenceTable(BaseModel):
    """Coincidence counts n_nu per labelled measurement setting

    Simulated tables hold whole numbers; analytic tables may hold expectation values.
    """
    labels: List[str] = Field(..., min_length=1)
    counts: List[float]
    basis_name: str = "james"
    integration_time: float = Field(1.0, gt=0.0)

    model_config = ConfigDict(frozen=True)

    @field_validator('counts')
    @classmethod
    def validate_counts(cls, v: List[float]) -> List[float]:
        for n in v:
            if not math.isfinite(n) or n < 0:
                raise ValueError(f'Counts must be finite and non-negative, got {n}')
        return v

    @model_validator(mode='after')
    def check_lengths(self) -> "CoincidenceTable":
        if len(self.labels) != len(self.counts):
            raise ValueError(f'{len(self.labels)} labels but {len(self.counts)} counts')
        if len(set(self.labels)) != len(self.labels):
            raise ValueError('Basis labels must be unique')
        return self

    @property
    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.labels, self.counts))

    @property
    def total(self) -> float:
        return float(sum(self.counts))

    def to_csv_rows(self) -> List[dict]:
        return [{"basis_label": lbl, "count": n} for lbl, n in zip(self.labels, self.counts)]


class ChshSettings(BaseModel):
    """Polarizer angles in degrees for the two parties"""
    a: float = 0.0
    a_prime: float = 45.0
    b: float = 22.5
    b_prime: float = 67.5

    model_config = ConfigDict(frozen=True)

    @staticmethod
    def perpendicular(angle: float) -> float:
        return angle + 90.0

    @property
    def alice_angles(self) -> List[float]:
        return [self.a, self.a_prime]

    @property
    def bob_angles(self) -> List[float]:
        return [self.b, self.b_prime]


class ChshReport(BaseModel):
    S: float
    E_values: Dict[str, float]
    angles: ChshSettings

    @property
    def violates_local_bound(self) -> bool:
        return abs(self.S) > 2.0
