import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models.analysis import PolarizationSetting
from ..models.circuit import (
    NUM_MODES, ChipSetup, CircuitElement, CircuitName, ElementKind, ErrorCase,
    NamedCircuit, PhaseSetting
)
from ..models.state import ModeIndex
from .qstate_service import QStateService

logger = logging.getLogger(__name__)

_COUPLER = np.array([[1, 1j], [1j, 1]]) / math.sqrt(2)

# Five MZIs of the purification block, in light-propagation order.
PURIFICATION_MESH: List[Tuple[int, int]] = [(0, 1), (2, 3), (1, 2), (0, 1), (2, 3)]
# MZIs of the bit-flip error generation circuit: polarization pair, then spatial pair.
BF_EGC_MESH: List[Tuple[int, int]] = [(0, 1), (2, 3), (0, 2), (1, 3)]

_BF_CROSSED = {
    ErrorCase.NONE: set(),
    ErrorCase.POLARIZATION: {(0, 1), (2, 3)},
    ErrorCase.SPATIAL: {(0, 2), (1, 3)},
    ErrorCase.BOTH: {(0, 1), (2, 3), (0, 2), (1, 3)},
}

_PF_PORTS = {
    ErrorCase.NONE: [],
    ErrorCase.POLARIZATION: [1, 3],
    ErrorCase.SPATIAL: [2, 3],
    ErrorCase.BOTH: [1, 2],
}

_PHASE_EPS = 1e-14


class CircuitService:
    """Builds the on-chip circuit configurations and compiles them to 4x4 unitaries"""

    def __init__(self):
        self.qstate_service = QStateService()

    def mzi_unitary(self, setting: PhaseSetting) -> np.ndarray:
        """U(theta, psi) = P(theta) C P(psi) C with phases on the upper arm"""
        internal = np.diag([np.exp(1j * setting.psi), 1.0])
        outer = np.diag([np.exp(1j * setting.theta), 1.0])
        return outer @ _COUPLER @ internal @ _COUPLER

    def gc_relabel_map(self) -> Dict[int, Tuple[int, str]]:
        """Path mode -> (spatial bit, polarization) performed by the 2D grating couplers"""
        out = {}
        for k in range(NUM_MODES):
            mode = ModeIndex(value=k)
            out[k] = (mode.spatial_bit, "HV"[mode.polarization_bit])
        return out

    def gc_inverse_map(self) -> Dict[Tuple[int, str], int]:
        return {
            (s, pol): ModeIndex.from_bits(s, "HV".index(pol)).value
            for s, pol in self.gc_relabel_map().values()
        }

    def purification_permutation(self) -> np.ndarray:
        """Permutation 0->1, 1->3, 2->2, 3->0 applied to both photons"""
        perm = np.zeros((NUM_MODES, NUM_MODES), dtype=complex)
        for src, dst in {0: 1, 1: 3, 2: 2, 3: 0}.items():
            perm[dst, src] = 1.0
        return perm

    def element_unitary(self, element: CircuitElement) -> np.ndarray:
        """Embed one element in the 4-mode space"""
        u = np.eye(NUM_MODES, dtype=complex)
        if element.kind == ElementKind.IDENTITY:
            return u
        if element.kind == ElementKind.PHASE_SHIFT:
            u[element.ports[0], element.ports[0]] = np.exp(1j * element.theta)
            return u
        if element.kind == ElementKind.CROSSING:
            block = np.array([[0, 1], [1, 0]], dtype=complex)
        else:
            block = self.mzi_unitary(element.setting)
        a, b = element.ports
        u[a, a], u[a, b] = block[0, 0], block[0, 1]
        u[b, a], u[b, b] = block[1, 0], block[1, 1]
        return u

    def compile_elements(self, elements: Sequence[CircuitElement]) -> np.ndarray:
        u = np.eye(NUM_MODES, dtype=complex)
        for element in elements:
            u = self.element_unitary(element) @ u
        return u

    def compile(self, circuit: NamedCircuit) -> np.ndarray:
        """Ordered product of the element unitaries"""
        u = self.compile_elements(circuit.elements)
        return self.qstate_service.check_unitary(u, circuit.description)

    def compile_setup(self, setup: ChipSetup) -> Tuple[np.ndarray, np.ndarray]:
        """(U_signal, U_idler) for the circuits each photon traverses"""
        u_signal = np.eye(NUM_MODES, dtype=complex)
        u_idler = np.eye(NUM_MODES, dtype=complex)
        for circuit in setup.signal:
            u_signal = self.compile(circuit) @ u_signal
        for circuit in setup.idler:
            u_idler = self.compile(circuit) @ u_idler
        return u_signal, u_idler

    def trim_output_phases(self, elements: List[CircuitElement]) -> List[CircuitElement]:
        """Append output phase shifters so a monomial circuit compiles to a real permutation"""
        u = self.compile_elements(elements)
        trimmed = list(elements)
        for row in range(NUM_MODES):
            col = int(np.argmax(np.abs(u[row])))
            phase = float(np.angle(u[row, col]))
            if abs(phase) > _PHASE_EPS:
                trimmed.append(CircuitElement.phase_shift(row, -phase))
        return trimmed

    def purification_off(self) -> NamedCircuit:
        elements = [CircuitElement.mzi(a, b, PhaseSetting.bar()) for a, b in PURIFICATION_MESH]
        return NamedCircuit(name=CircuitName.PURIFICATION_OFF, elements=elements)

    def purification_on(self) -> NamedCircuit:
        """First MZI at bar, the other four crossed"""
        settings = [PhaseSetting.bar()] + [PhaseSetting.cross()] * 4
        elements = [
            CircuitElement.mzi(a, b, s) for (a, b), s in zip(PURIFICATION_MESH, settings)
        ]
        return NamedCircuit(name=CircuitName.PURIFICATION_ON, elements=self.trim_output_phases(elements))

    def spatial_readout(self) -> NamedCircuit:
        """Purification block reconfigured to exchange modes 1 and 2

        H-polarized photons of both spatial modes then exit on waveguides 0 and 1.
        """
        elements = [
            CircuitElement.mzi(a, b, PhaseSetting.cross() if (a, b) == (1, 2) else PhaseSetting.bar())
            for a, b in PURIFICATION_MESH
        ]
        return NamedCircuit(name=CircuitName.SPATIAL_READOUT, elements=self.trim_output_phases(elements))

    def bf_egc(self, case: ErrorCase) -> NamedCircuit:
        crossed = _BF_CROSSED[case]
        elements = [
            CircuitElement.mzi(a, b, PhaseSetting.cross() if (a, b) in crossed else PhaseSetting.bar())
            for a, b in BF_EGC_MESH
        ]
        return NamedCircuit(name=CircuitName.BF_EGC, case=case, elements=self.trim_output_phases(elements))

    def pf_egc(self, case: ErrorCase) -> NamedCircuit:
        elements = [CircuitElement.phase_shift(port, math.pi) for port in _PF_PORTS[case]]
        return NamedCircuit(name=CircuitName.PF_EGC, case=case, elements=elements)

    def hadamard_circuit(self, name: CircuitName = CircuitName.HADAMARD_IDLER) -> NamedCircuit:
        """Balanced MZIs on (0,1),(2,3) then (0,2),(1,3); output phases remove the global -i"""
        if name not in (CircuitName.HADAMARD_SIGNAL, CircuitName.HADAMARD_IDLER):
            raise ValueError(f'{name.value} is not a Hadamard layer')
        elements = [CircuitElement.mzi(a, b, PhaseSetting.balanced()) for a, b in [(0, 1), (2, 3)]]
        elements += [CircuitElement.mzi(a, b, PhaseSetting.balanced()) for a, b in [(0, 2), (1, 3)]]
        elements += [CircuitElement.phase_shift(port, math.pi / 2) for port in range(NUM_MODES)]
        return NamedCircuit(name=name, elements=elements)

    def hadamard_layer(self) -> np.ndarray:
        return self.compile(self.hadamard_circuit())

    def measurement_circuit(self, setting: PolarizationSetting) -> NamedCircuit:
        """Port 0 detection projects the (0, 1) mode pair onto cos(a)|H> + e^{ib} sin(a)|V>"""
        elements = [
            CircuitElement.phase_shift(0, setting.beta),
            CircuitElement.mzi(0, 1, PhaseSetting(theta=0.0, psi=math.pi - 2 * setting.alpha)),
        ]
        return NamedCircuit(name=CircuitName.MEASUREMENT_BASIS, elements=elements)

    def named_circuit(self, name: CircuitName, case: Optional[ErrorCase] = None) -> NamedCircuit:
        """Build any configuration that needs no measurement setting"""
        if name == CircuitName.BF_EGC:
            return self.bf_egc(case or ErrorCase.NONE)
        if name == CircuitName.PF_EGC:
            return self.pf_egc(case or ErrorCase.NONE)
        if name in (CircuitName.HADAMARD_SIGNAL, CircuitName.HADAMARD_IDLER):
            return self.hadamard_circuit(name)
        builders = {
            CircuitName.PURIFICATION_ON: self.purification_on,
            CircuitName.PURIFICATION_OFF: self.purification_off,
            CircuitName.SPATIAL_READOUT: self.spatial_readout,
        }
        if name not in builders:
            raise ValueError(f'Circuit {name.value} needs a measurement setting')
        return builders[name]()

    def is_permutation(self, u: np.ndarray, tol: float = 1e-10) -> bool:
        mod = np.abs(u)
        rounded = np.round(mod)
        return bool(
            np.max(np.abs(mod - rounded)) <= tol
            and np.all(rounded.sum(axis=0) == 1)
            and np.all(rounded.sum(axis=1) == 1)
        )
