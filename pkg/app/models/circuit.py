import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

NUM_MODES = 4
TWO_PI = 2 * math.pi


class ElementKind(str, Enum):
    MZI = "mzi"
    CROSSING = "crossing"
    PHASE_SHIFT = "phase_shift"
    IDENTITY = "identity"


class CircuitName(str, Enum):
    PF_EGC = "pf_egc"
    BF_EGC = "bf_egc"
    HADAMARD_SIGNAL = "hadamard_signal"
    HADAMARD_IDLER = "hadamard_idler"
    PURIFICATION_ON = "purification_on"
    PURIFICATION_OFF = "purification_off"
    SPATIAL_READOUT = "spatial_readout"
    MEASUREMENT_BASIS = "measurement_basis"


class ErrorCase(str, Enum):
    """Which fiber qubit an error generation circuit flips"""
    NONE = "none"
    POLARIZATION = "polarization"
    SPATIAL = "spatial"
    BOTH = "both"


class PhaseSetting(BaseModel):
    """MZI phases in radians: theta on the upper output arm, psi between the couplers

    psi = pi is the bar state, psi = 0 the cross state.
    """
    theta: float = 0.0
    psi: float = 0.0

    model_config = ConfigDict(frozen=True)

    @field_validator('theta', 'psi')
    @classmethod
    def wrap_phase(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError('Phase must be finite')
        return v % TWO_PI

    @classmethod
    def bar(cls) -> "PhaseSetting":
        # theta = pi cancels the -1 the bar state leaves on the upper arm
        return cls(theta=math.pi, psi=math.pi)

    @classmethod
    def cross(cls) -> "PhaseSetting":
        return cls(theta=0.0, psi=0.0)

    @classmethod
    def balanced(cls) -> "PhaseSetting":
        return cls(theta=0.0, psi=math.pi / 2)


class CircuitElement(BaseModel):
    """One element acting on the four path modes

    JSON form: {"kind", "ports", "theta", "psi"}; a phase shifter stores its phase in theta.
    """
    kind: ElementKind
    ports: List[int] = Field(default_factory=list)
    theta: float = 0.0
    psi: float = 0.0

    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_validator('ports')
    @classmethod
    def validate_ports(cls, v: List[int]) -> List[int]:
        for port in v:
            if port < 0 or port >= NUM_MODES:
                raise ValueError(f'Port {port} outside [0, {NUM_MODES - 1}]')
        return v

    @field_validator('theta', 'psi')
    @classmethod
    def wrap_phase(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError('Phase must be finite')
        return v % TWO_PI

    @model_validator(mode='after')
    def check_port_arity(self) -> "CircuitElement":
        expected = {
            ElementKind.MZI: 2,
            ElementKind.CROSSING: 2,
            ElementKind.PHASE_SHIFT: 1,
            ElementKind.IDENTITY: 0,
        }[self.kind]
        if len(self.ports) != expected:
            raise ValueError(f'{self.kind.value} needs {expected} ports, got {self.ports}')
        if expected == 2 and self.ports[0] == self.ports[1]:
            raise ValueError(f'{self.kind.value} port pair must be distinct, got {self.ports}')
        return self

    @property
    def setting(self) -> PhaseSetting:
        return PhaseSetting(theta=self.theta, psi=self.psi)

    @classmethod
    def mzi(cls, upper: int, lower: int, setting: PhaseSetting) -> "CircuitElement":
        return cls(kind=ElementKind.MZI, ports=[upper, lower], theta=setting.theta, psi=setting.psi)

    @classmethod
    def crossing(cls, a: int, b: int) -> "CircuitElement":
        return cls(kind=ElementKind.CROSSING, ports=[a, b])

    @classmethod
    def phase_shift(cls, port: int, phase: float) -> "CircuitElement":
        return cls(kind=ElementKind.PHASE_SHIFT, ports=[port], theta=phase)


class NamedCircuit(BaseModel):
    """A named on-chip configuration, serialized as {name, elements: [...]}"""
    name: CircuitName
    case: Optional[ErrorCase] = None
    elements: List[CircuitElement] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def description(self) -> str:
        if self.case is None:
            return self.name.value
        return f"{self.name.value}[{self.case.value}]"


class ChipSetup(BaseModel):
    """Circuits traversed by each photon, in order, after the fiber channel"""
    signal: List[NamedCircuit] = Field(default_factory=list)
    idler: List[NamedCircuit] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True, extra="forbid")
