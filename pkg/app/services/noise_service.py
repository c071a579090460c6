import logging
from typing import Dict, List, Tuple

import numpy as np

from ..models.circuit import ErrorCase
from ..models.noise import ChannelBranch, ChannelMix, ErrorKind, WernerParam
from ..models.state import BellKind, JointDensityMatrix
from .circuit_service import CircuitService
from .qstate_service import QStateService

logger = logging.getLogger(__name__)

_KIND_TO_CIRCUIT: Dict[ErrorKind, Tuple[str, ErrorCase]] = {
    ErrorKind.BF_POL: ("bf", ErrorCase.POLARIZATION),
    ErrorKind.BF_SPA: ("bf", ErrorCase.SPATIAL),
    ErrorKind.BF_BOTH: ("bf", ErrorCase.BOTH),
    ErrorKind.PF_POL: ("pf", ErrorCase.POLARIZATION),
    ErrorKind.PF_SPA: ("pf", ErrorCase.SPATIAL),
    ErrorKind.PF_BOTH: ("pf", ErrorCase.BOTH),
}


class NoiseService:
    """Time-binned flip channels of the error generation circuits, and Werner states"""

    def __init__(self):
        self.circuit_service = CircuitService()
        self.qstate_service = QStateService()

    def error_unitary(self, kind: ErrorKind) -> np.ndarray:
        """4x4 unitary the error generation circuit applies in the given configuration"""
        if kind == ErrorKind.NONE:
            return np.eye(4, dtype=complex)
        family, case = _KIND_TO_CIRCUIT[kind]
        if family == "bf":
            return self.circuit_service.compile(self.circuit_service.bf_egc(case))
        return self.circuit_service.compile(self.circuit_service.pf_egc(case))

    def _flip_mix(self, p: float, kinds: List[ErrorKind]) -> ChannelMix:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f'Flip probability must be in [0, 1], got {p}')
        weights = [(1 - p) ** 2, p * (1 - p), p * (1 - p), p ** 2]
        branches = [
            ChannelBranch(p=w, kind=k) for w, k in zip(weights, kinds) if w > 0.0
        ]
        return ChannelMix(branches=branches)

    def bf_channel_mix(self, p: float) -> ChannelMix:
        """Independent bit flips with probability p on the polarization and spatial qubits"""
        return self._flip_mix(p, [ErrorKind.NONE, ErrorKind.BF_POL, ErrorKind.BF_SPA, ErrorKind.BF_BOTH])

    def pf_channel_mix(self, p: float) -> ChannelMix:
        return self._flip_mix(p, [ErrorKind.NONE, ErrorKind.PF_POL, ErrorKind.PF_SPA, ErrorKind.PF_BOTH])

    def apply_channel_mix(self, rho: JointDensityMatrix, mix: ChannelMix) -> JointDensityMatrix:
        """Sum_i p_i U_i rho U_i^dagger with U_i = signal_i (x) idler_i"""
        if rho.dim != 16:
            raise ValueError(f'Channel mixes act on the 16-dim two-photon space, got dim {rho.dim}')
        out = np.zeros((16, 16), dtype=complex)
        for branch in mix.branches:
            u = np.kron(self.error_unitary(branch.signal_kind), self.error_unitary(branch.kind))
            out += branch.p * (u @ rho.matrix @ u.conj().T)
        logger.debug("Applied %d-branch channel mix", len(mix.branches))
        return JointDensityMatrix(matrix=(out + out.conj().T) / 2)

    def sample_branches(self, mix: ChannelMix, trials: int, rng: np.random.Generator) -> np.ndarray:
        """Branch index per trial, drawn from the caller's random stream"""
        probabilities = np.array(mix.probabilities)
        return rng.choice(len(mix.branches), size=trials, p=probabilities / probabilities.sum())

    def werner_state(self, param: WernerParam) -> JointDensityMatrix:
        """F |Phi+><Phi+| + (1 - F)/3 (I - |Phi+><Phi+|)"""
        phi = self.qstate_service.bell_density(BellKind.PHI_PLUS).matrix
        matrix = param.F * phi + (1 - param.F) / 3 * (np.eye(4) - phi)
        return JointDensityMatrix(matrix=matrix)

    def werner_hyper_state(self, spatial_F: float, polarization_F: float) -> JointDensityMatrix:
        """Product of Werner states in the two degrees of freedom, path-mode ordered"""
        return self.qstate_service.compose_dofs(
            self.werner_state(WernerParam(F=spatial_F)),
            self.werner_state(WernerParam(F=polarization_F)),
        )
