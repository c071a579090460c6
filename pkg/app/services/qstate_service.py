import logging
import math
from typing import Union

import numpy as np

from ..models.state import (
    BellKind, DegreeOfFreedom, JointDensityMatrix, JointState
)

logger = logging.getLogger(__name__)

StateLike = Union[JointState, JointDensityMatrix]

UNITARY_TOL = 1e-10
PURE_TOL = 1e-12

_BELL_VECTORS = {
    BellKind.PHI_PLUS: np.array([1, 0, 0, 1]) / math.sqrt(2),
    BellKind.PHI_MINUS: np.array([1, 0, 0, -1]) / math.sqrt(2),
    BellKind.PSI_PLUS: np.array([0, 1, 1, 0]) / math.sqrt(2),
    BellKind.PSI_MINUS: np.array([0, 1, -1, 0]) / math.sqrt(2),
}

# rho16 reshaped to (2,)*8 has axes [sa, pa, sb, pb, sa', pa', sb', pb']
_TRACE_OUT_SPATIAL = 'iajbicjd->abcd'
_TRACE_OUT_POLARIZATION = 'aibjcidj->abcd'


def hermitian_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix with negative eigenvalues clamped to 0"""
    w, v = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


class QStateService:
    """Vector and density-matrix algebra on the two-photon path space

    Ordering is signal-major, idler-minor. On the 16-dim space a path mode k of one
    photon carries (spatial_bit, polarization_bit) = (k // 2, k % 2).
    """

    def bell_state(self, kind: BellKind) -> JointState:
        return JointState(amplitudes=_BELL_VECTORS[kind], dims=(2, 2))

    def bell_density(self, kind: BellKind) -> JointDensityMatrix:
        return JointDensityMatrix.from_state(self.bell_state(kind))

    def hyper_bell_state(self, spatial: BellKind, polarization: BellKind) -> JointState:
        """|spatial>_s (x) |polarization>_p rearranged into path-mode ordering"""
        s = _BELL_VECTORS[spatial]
        p = _BELL_VECTORS[polarization]
        amplitudes = np.kron(s, p).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(16)
        return JointState(amplitudes=amplitudes, dims=(4, 4))

    def hyper_state(self) -> JointState:
        """1/2 (|00> + |11> + |22> + |33>)"""
        amplitudes = np.zeros(16, dtype=complex)
        for k in range(4):
            amplitudes[4 * k + k] = 0.5
        return JointState(amplitudes=amplitudes, dims=(4, 4))

    def compose_dofs(self, rho_spatial: JointDensityMatrix, rho_polar: JointDensityMatrix) -> JointDensityMatrix:
        """Product of a spatial-qubit and a polarization-qubit state on the 16-dim path space"""
        if rho_spatial.dim != 4 or rho_polar.dim != 4:
            raise ValueError(f'compose_dofs needs two-qubit inputs, got dims {rho_spatial.dim} and {rho_polar.dim}')
        joint = np.kron(rho_spatial.matrix, rho_polar.matrix).reshape((2,) * 8)
        joint = joint.transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(16, 16)
        return JointDensityMatrix(matrix=joint)

    def as_density(self, state: StateLike) -> JointDensityMatrix:
        if isinstance(state, JointDensityMatrix):
            return state
        if not state.normalized:
            raise ValueError('Cannot build a density matrix from an unnormalized residue')
        return JointDensityMatrix.from_state(state)

    def fidelity(self, rho: StateLike, rho0: StateLike) -> float:
        """Uhlmann fidelity (Tr sqrt(sqrt(rho0) rho sqrt(rho0)))^2, clipped to [0, 1]

        If either argument is pure this is Tr(rho rho0) = <psi|rho|psi>, evaluated
        directly so Bell-state targets stay exact to rounding.
        """
        left = self.as_density(rho)
        right = self.as_density(rho0)
        a, b = left.matrix, right.matrix
        if a.shape != b.shape:
            raise ValueError(f'Dimension mismatch: {a.shape[0]} vs {b.shape[0]}')
        if abs(left.purity - 1.0) <= PURE_TOL or abs(right.purity - 1.0) <= PURE_TOL:
            overlap = float(np.real(np.trace(a @ b)))
            return min(max(overlap, 0.0), 1.0)
        root = hermitian_sqrt(b)
        inner = root @ a @ root
        w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
        value = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
        return min(max(value, 0.0), 1.0)

    def partial_trace(self, rho16: StateLike, keep: DegreeOfFreedom) -> JointDensityMatrix:
        """Two-qubit state of one degree of freedom, the other traced out on both photons"""
        rho = self.as_density(rho16)
        if rho.dim != 16:
            raise ValueError(f'partial_trace expects a 16-dim state, got dim {rho.dim}')
        if keep == DegreeOfFreedom.POLARIZATION:
            pattern = _TRACE_OUT_SPATIAL
        elif keep == DegreeOfFreedom.SPATIAL:
            pattern = _TRACE_OUT_POLARIZATION
        else:
            raise ValueError(f'Unknown degree of freedom: {keep}')
        reduced = np.einsum(pattern, rho.matrix.reshape((2,) * 8)).reshape(4, 4)
        return JointDensityMatrix(matrix=(reduced + reduced.conj().T) / 2)

    def single_photon_state(self, rho: StateLike) -> np.ndarray:
        """Reduced state of the signal photon on its own mode space"""
        m = self.as_density(rho).matrix
        d = int(round(math.sqrt(m.shape[0])))
        return np.einsum('ajbj->ab', m.reshape(d, d, d, d))

    def check_unitary(self, u: np.ndarray, name: str = "U") -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f'{name} must be square, got shape {u.shape}')
        deviation = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if deviation > UNITARY_TOL:
            raise ValueError(f'{name} is not unitary (max deviation {deviation:.3e})')
        return u

    def apply_unitary(self, state: StateLike, u_signal: np.ndarray, u_idler: np.ndarray) -> StateLike:
        """(U_s (x) U_i) applied to a pure state or by conjugation to a density matrix"""
        u_s = self.check_unitary(u_signal, "U_signal")
        u_i = self.check_unitary(u_idler, "U_idler")
        total = np.kron(u_s, u_i)
        if isinstance(state, JointState):
            if total.shape[0] != state.dim:
                raise ValueError(f'Unitary of dim {total.shape[0]} cannot act on a {state.dim}-dim state')
            return JointState(amplitudes=total @ state.amplitudes, dims=state.dims, normalized=state.normalized)
        if total.shape[0] != state.dim:
            raise ValueError(f'Unitary of dim {total.shape[0]} cannot act on a {state.dim}-dim state')
        out = total @ state.matrix @ total.conj().T
        return JointDensityMatrix(matrix=(out + out.conj().T) / 2)
