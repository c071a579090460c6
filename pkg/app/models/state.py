from enum import Enum
from typing import Any, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_serializer, model_validator

# Structural tolerance for Hermiticity and trace, PSD slack, and pure-state norm.
STRUCTURAL_TOL = 1e-10
PSD_TOL = 1e-8
NORM_TOL = 1e-12

DENSITY_DIMS = (4, 16)


class DegreeOfFreedom(str, Enum):
    """Photonic degree of freedom carrying a qubit in fiber"""
    POLARIZATION = "polarization"
    SPATIAL = "spatial"


class BellKind(str, Enum):
    """The four Bell states, over basis {00, 01, 10, 11}"""
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"

    @property
    def is_phi(self) -> bool:
        return self in (BellKind.PHI_PLUS, BellKind.PHI_MINUS)

    @property
    def sign(self) -> int:
        return 1 if self in (BellKind.PHI_PLUS, BellKind.PSI_PLUS) else -1


class BellLabel(BaseModel):
    """A Bell state tagged with the degree of freedom it lives in"""
    kind: BellKind
    dof: DegreeOfFreedom

    model_config = ConfigDict(frozen=True)

    @property
    def symbol(self) -> str:
        """phi/psi for the spatial qubit, Phi/Psi for polarization"""
        family = "phi" if self.kind.is_phi else "psi"
        if self.dof == DegreeOfFreedom.POLARIZATION:
            family = family.capitalize()
        return f"{family}{'+' if self.kind.sign > 0 else '-'}"


class ModeIndex(BaseModel):
    """Waveguide path mode 0-3 and its fiber (spatial, polarization) decomposition"""
    value: int = Field(..., ge=0, le=3)

    model_config = ConfigDict(frozen=True)

    @property
    def spatial_bit(self) -> int:
        return self.value // 2

    @property
    def polarization_bit(self) -> int:
        return self.value % 2

    @property
    def label(self) -> str:
        """Fiber label, e.g. 3 -> '1V'"""
        return f"{self.spatial_bit}{'HV'[self.polarization_bit]}"

    @classmethod
    def from_bits(cls, spatial_bit: int, polarization_bit: int) -> "ModeIndex":
        if spatial_bit not in (0, 1) or polarization_bit not in (0, 1):
            raise ValueError(f"Bits must be 0 or 1, got ({spatial_bit}, {polarization_bit})")
        return cls(value=2 * spatial_bit + polarization_bit)


class JointState(BaseModel):
    """Pure two-photon amplitudes, signal-major / idler-minor ordering"""
    amplitudes: np.ndarray
    dims: Tuple[int, int] = (4, 4)
    normalized: bool = True  # False only for post-selection residues

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('amplitudes', mode='before')
    @classmethod
    def validate_amplitudes(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=complex).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode='after')
    def check_shape_and_norm(self) -> "JointState":
        d1, d2 = self.dims
        if self.amplitudes.size != d1 * d2:
            raise ValueError(f"Expected {d1 * d2} amplitudes for dims {self.dims}, got {self.amplitudes.size}")
        if self.normalized:
            norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
            if abs(norm - 1.0) > NORM_TOL:
                raise ValueError(f"State is not normalized (squared norm {norm:.15f})")
        return self

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def amplitude(self, signal_mode: int, idler_mode: int) -> complex:
        return complex(self.amplitudes[signal_mode * self.dims[1] + idler_mode])

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


class JointDensityMatrix(BaseModel):
    """Density operator on two qubits (dim 4) or two ququarts (dim 16)

    Serializes to {"dim": d, "re": [[...]], "im": [[...]]}.
    """
    matrix: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode='before')
    @classmethod
    def accept_json_form(cls, data: Any) -> Any:
        if isinstance(data, dict) and "re" in data:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
            if "dim" in data and re.shape != (data["dim"], data["dim"]):
                raise ValueError(f"Declared dim {data['dim']} does not match matrix shape {re.shape}")
            return {"matrix": re + 1j * im}
        return data

    @field_validator('matrix', mode='before')
    @classmethod
    def validate_matrix(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Density matrix must be square, got shape {arr.shape}")
        if arr.shape[0] not in DENSITY_DIMS:
            raise ValueError(f"Density matrix dimension must be one of {DENSITY_DIMS}, got {arr.shape[0]}")
        if np.max(np.abs(arr - arr.conj().T)) > STRUCTURAL_TOL:
            raise ValueError("Density matrix is not Hermitian")
        trace = np.trace(arr).real
        if abs(trace - 1.0) > STRUCTURAL_TOL:
            raise ValueError(f"Density matrix trace is {trace:.12f}, expected 1")
        smallest = float(np.linalg.eigvalsh((arr + arr.conj().T) / 2)[0])
        if smallest < -PSD_TOL:
            raise ValueError(f"Density matrix is not positive semidefinite (eigenvalue {smallest:.3e})")
        arr.setflags(write=False)
        return arr

    @model_serializer
    def serialize_matrix(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    @classmethod
    def from_state(cls, state: JointState) -> "JointDensityMatrix":
        return cls(matrix=state.projector())

    @classmethod
    def maximally_mixed(cls, dim: int) -> "JointDensityMatrix":
        return cls(matrix=np.eye(dim) / dim)
