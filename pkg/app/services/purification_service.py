import logging
import math
from itertools import product
from typing import Dict, List, Tuple

import numpy as np

from ..errors import NumericalError
from ..models.purification import Collection, PurificationOutcome, SyndromeRow
from ..models.state import BellKind, BellLabel, DegreeOfFreedom, JointDensityMatrix
from .circuit_service import CircuitService
from .qstate_service import QStateService, StateLike

logger = logging.getLogger(__name__)

NO_COINCIDENCE_TOL = 1e-12

# Two-photon indices 4 * signal + idler of each collected waveguide pair, qubit order.
_PAIR_INDICES = {
    Collection.FIRST_PAIR: [0, 1, 4, 5],
    Collection.SECOND_PAIR: [10, 11, 14, 15],
}

_BELL_ORDER = [BellKind.PHI_PLUS, BellKind.PHI_MINUS, BellKind.PSI_PLUS, BellKind.PSI_MINUS]

BellWeights = Dict[Tuple[BellKind, BellKind], float]


def _split_mask() -> np.ndarray:
    """Diagonal mask of two-photon terms with one photon in {0,1} and the other in {2,3}"""
    low = np.array([k < 2 for k in range(4)])
    return np.logical_xor.outer(low, low).reshape(16)


class PurificationService:
    """Purification by mode permutation and pair post-selection, plus its closed-form theory"""

    def __init__(self):
        self.qstate_service = QStateService()
        self.circuit_service = CircuitService()

    def collect_block(self, rho16: np.ndarray, collection: Collection) -> np.ndarray:
        """Unnormalized two-qubit block of the collected waveguides (relabelled 2->0, 3->1)"""
        if collection == Collection.BOTH_PARALLEL:
            return (
                self.collect_block(rho16, Collection.FIRST_PAIR)
                + self.collect_block(rho16, Collection.SECOND_PAIR)
            )
        idx = _PAIR_INDICES[collection]
        return rho16[np.ix_(idx, idx)]

    def purify(self, rho16: StateLike, collection: Collection = Collection.FIRST_PAIR) -> PurificationOutcome:
        """Permute both photons, post-select coincidences in the collected waveguides"""
        rho = self.qstate_service.as_density(rho16)
        if rho.dim != 16:
            raise ValueError(f'purify expects a 16-dim state, got dim {rho.dim}')
        perm = self.circuit_service.purification_permutation()
        permuted = self.qstate_service.apply_unitary(rho, perm, perm).matrix

        block = self.collect_block(permuted, collection)
        success = min(max(float(np.trace(block).real), 0.0), 1.0)
        single = min(max(float(np.sum(np.diag(permuted).real[_split_mask()])), 0.0), 1.0)
        logger.debug("purify(%s): success %.6f, single-photon %.6f", collection.value, success, single)

        if success < NO_COINCIDENCE_TOL:
            return PurificationOutcome(
                post_state=None,
                success_probability=success,
                single_photon_probability=single,
                collection=collection,
            )
        post = block / success
        return PurificationOutcome(
            post_state=JointDensityMatrix(matrix=(post + post.conj().T) / 2),
            success_probability=success,
            single_photon_probability=single,
            collection=collection,
        )

    def purify_pf(self, rho16: StateLike, collection: Collection = Collection.FIRST_PAIR) -> PurificationOutcome:
        """Hadamard layer on both photons turns phase flips into bit flips, then purify"""
        h = self.circuit_service.hadamard_layer()
        converted = self.qstate_service.apply_unitary(self.qstate_service.as_density(rho16), h, h)
        return self.purify(converted, collection)

    def post_fidelity(self, outcome: PurificationOutcome, target: BellKind = BellKind.PHI_PLUS) -> float:
        if not outcome.has_coincidences:
            raise NumericalError('No coincidences survive post-selection; fidelity is undefined')
        return self.qstate_service.fidelity(outcome.post_state, self.qstate_service.bell_density(target))

    def theoretical_fidelity_bf(self, F1: float, F2: float) -> float:
        """F' = F1 F2 / (F1 F2 + (1 - F1)(1 - F2)) for bit-flip-only channels"""
        for name, value in (("F1", F1), ("F2", F2)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f'{name} must be in [0, 1], got {value}')
        denominator = F1 * F2 + (1 - F1) * (1 - F2)
        if denominator == 0.0:
            raise NumericalError(f'Purified fidelity undefined for F1={F1}, F2={F2}')
        return F1 * F2 / denominator

    def theoretical_fidelity_werner(self, F: float) -> float:
        """Purified fidelity of a Werner state pair, white noise in both degrees of freedom"""
        if not 0.0 <= F <= 1.0:
            raise ValueError(f'F must be in [0, 1], got {F}')
        e = 1 - F
        return (F ** 2 + e ** 2 / 9) / (F ** 2 + 2 * F * e / 3 + 5 * e ** 2 / 9)

    def fidelity_gain_peak(self) -> Tuple[float, float]:
        """Exact maximizer of F'(F) - F for a symmetric bit-flip channel, and the gain there"""
        peak = 0.5 + math.sqrt(math.sqrt(5) - 2) / 2
        return peak, self.theoretical_fidelity_bf(peak, peak) - peak

    def werner_weights(self, F: float) -> BellWeights:
        """Product of Werner Bell weights in the spatial and polarization qubits"""
        if not 0.0 <= F <= 1.0:
            raise ValueError(f'F must be in [0, 1], got {F}')
        single = {k: (F if k == BellKind.PHI_PLUS else (1 - F) / 3) for k in _BELL_ORDER}
        return {(s, p): single[s] * single[p] for s, p in product(_BELL_ORDER, _BELL_ORDER)}

    def hd_state(self, spatial: BellKind, polar: BellKind) -> str:
        """On-chip path state after the couplers and the permutation, e.g. |11>+|33>+|22>+|00>"""
        perm = self.circuit_service.purification_permutation()
        amplitudes = self.qstate_service.hyper_bell_state(spatial, polar).amplitudes
        terms = []
        for index in np.flatnonzero(np.abs(amplitudes) > 1e-12):
            signal, idler = divmod(int(index), 4)
            s_out = int(np.argmax(np.abs(perm[:, signal])))
            i_out = int(np.argmax(np.abs(perm[:, idler])))
            sign = "-" if amplitudes[index].real < 0 else "+"
            terms.append(f"{sign}|{s_out}{i_out}>")
        text = "".join(terms)
        return text[1:] if text.startswith("+") else text

    def syndrome_rows(self, weights: BellWeights) -> List[SyndromeRow]:
        """Syndrome rows for arbitrary weights over the 16 hyper-Bell products

        A pair gives a coincidence iff both qubits are in the same family (phi/Phi or
        psi/Psi); the surviving polarization state carries the product of the signs.
        """
        total = math.fsum(weights.values())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f'Syndrome weights sum to {total}, expected 1')
        rows = []
        for spatial, polar in product(_BELL_ORDER, _BELL_ORDER):
            coincidence = spatial.is_phi == polar.is_phi
            if coincidence:
                plus = spatial.sign * polar.sign > 0
                if polar.is_phi:
                    post = BellKind.PHI_PLUS if plus else BellKind.PHI_MINUS
                else:
                    post = BellKind.PSI_PLUS if plus else BellKind.PSI_MINUS
                post_label = BellLabel(kind=post, dof=DegreeOfFreedom.POLARIZATION).symbol
            else:
                post_label = "none"
            rows.append(SyndromeRow(
                spatial_bell=BellLabel(kind=spatial, dof=DegreeOfFreedom.SPATIAL),
                polar_bell=BellLabel(kind=polar, dof=DegreeOfFreedom.POLARIZATION),
                probability=min(max(weights.get((spatial, polar), 0.0), 0.0), 1.0),
                coincidence=coincidence,
                post_label=post_label,
                hd_state=self.hd_state(spatial, polar),
            ))
        return rows

    def syndrome_table(self, F: float) -> List[SyndromeRow]:
        return self.syndrome_rows(self.werner_weights(F))

    def syndrome_fidelity(self, rows: List[SyndromeRow]) -> float:
        """Weight of coincidence rows that end in Phi+, over all coincidence weight"""
        accepted = math.fsum(r.probability for r in rows if r.coincidence)
        if accepted <= 0.0:
            raise NumericalError('No syndrome row produces a coincidence')
        good = math.fsum(r.probability for r in rows if r.coincidence and r.post_label == "Phi+")
        return good / accepted

    def syndrome_success(self, rows: List[SyndromeRow], collection: Collection = Collection.FIRST_PAIR) -> float:
        accepted = math.fsum(r.probability for r in rows if r.coincidence)
        return accepted if collection == Collection.BOTH_PARALLEL else 0.5 * accepted

    def bell_mixture(self, weights: BellWeights) -> JointDensityMatrix:
        """16-dim mixture of hyper-Bell products with the given weights"""
        rho = np.zeros((16, 16), dtype=complex)
        for (spatial, polar), w in weights.items():
            if w > 0.0:
                rho += w * self.qstate_service.hyper_bell_state(spatial, polar).projector()
        return JointDensityMatrix(matrix=rho)
