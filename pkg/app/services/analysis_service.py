import logging
import math
from typing import Dict, List, Tuple, Union

import numpy as np

from ..errors import NumericalError
from ..models.analysis import (
    ChshReport, ChshSettings, CoincidenceTable, CountingMode, MeasurementSetting,
    PolarizationSetting, TomographyBasisSet
)
from ..models.state import JointDensityMatrix
from .qstate_service import QStateService, StateLike

logger = logging.getLogger(__name__)

SINGLE_QUBIT_STATES: Dict[str, PolarizationSetting] = {
    "H": PolarizationSetting(label="H", alpha=0.0),
    "V": PolarizationSetting(label="V", alpha=math.pi / 2),
    "D": PolarizationSetting(label="D", alpha=math.pi / 4),
    "A": PolarizationSetting(label="A", alpha=math.pi / 4, beta=math.pi),
    "R": PolarizationSetting(label="R", alpha=math.pi / 4, beta=math.pi / 2),
    "L": PolarizationSetting(label="L", alpha=math.pi / 4, beta=-math.pi / 2),
}

# Normalization block (complete basis) first.
JAMES_LABELS = [
    "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
    "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL",
]

# Single-qubit bases of the four-detector mode: (port 0 outcome, port 1 outcome).
PARALLEL_BASES = [("H", "V"), ("D", "A"), ("R", "L")]

MAX_CONDITION = 1e12

CountsOrState = Union[CoincidenceTable, JointDensityMatrix]


def project_to_density(matrix: np.ndarray) -> np.ndarray:
    """Nearest unit-trace PSD matrix in Frobenius norm (eigenvalue simplex projection)"""
    hermitian = (matrix + matrix.conj().T) / 2
    w, v = np.linalg.eigh(hermitian)
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, u.size + 1)
    rho = int(np.nonzero(u - (css - 1) / ks > 0)[0][-1])
    tau = (css[rho] - 1) / (rho + 1)
    clipped = np.clip(w - tau, 0.0, None)
    out = (v * clipped) @ v.conj().T
    return (out + out.conj().T) / 2


def polarizer_observable(degrees: float) -> np.ndarray:
    """+-1 linear polarization observable cos(2t) Z + sin(2t) X"""
    t = 2 * math.radians(degrees)
    return np.array([[math.cos(t), math.sin(t)], [math.sin(t), -math.cos(t)]], dtype=complex)


def chsh_label(a: float, b: float) -> str:
    return f"{a:g}|{b:g}"


class AnalysisService:
    """Two-qubit tomography, fidelity reporting and CHSH evaluation"""

    def __init__(self):
        self.qstate_service = QStateService()
        self._dual_cache: Dict[str, List[np.ndarray]] = {}

    def james_basis(self) -> TomographyBasisSet:
        settings = [
            MeasurementSetting(label=lbl, signal=SINGLE_QUBIT_STATES[lbl[0]], idler=SINGLE_QUBIT_STATES[lbl[1]])
            for lbl in JAMES_LABELS
        ]
        return TomographyBasisSet(name="james", settings=settings)

    def parallel_labels(self) -> List[List[str]]:
        """Outcome labels of the nine four-detector settings, grouped per setting"""
        groups = []
        for sig in PARALLEL_BASES:
            for idl in PARALLEL_BASES:
                groups.append([s + i for s in sig for i in idl])
        return groups

    def parallel_settings(self) -> List[List[MeasurementSetting]]:
        return [
            [
                MeasurementSetting(label=lbl, signal=SINGLE_QUBIT_STATES[lbl[0]], idler=SINGLE_QUBIT_STATES[lbl[1]])
                for lbl in group
            ]
            for group in self.parallel_labels()
        ]

    def dual_frame(self, basis: TomographyBasisSet) -> List[np.ndarray]:
        """Matrices M_nu with rho = sum_nu M_nu Tr(P_nu rho) for every rho"""
        if basis.name in self._dual_cache:
            return self._dual_cache[basis.name]
        b = np.array([s.projector().conj().reshape(-1) for s in basis.settings])
        condition = np.linalg.cond(b)
        if not np.isfinite(condition) or condition > MAX_CONDITION:
            raise NumericalError(f'Basis set {basis.name} is not tomographically complete (condition {condition:.3e})')
        inverse = np.linalg.inv(b)
        duals = [inverse[:, nu].reshape(4, 4) for nu in range(len(basis.settings))]
        self._dual_cache[basis.name] = duals
        return duals

    def to_james_table(self, table: CoincidenceTable) -> CoincidenceTable:
        """Pick the sixteen tomography counts out of a four-detector table"""
        if table.basis_name == "james":
            return table
        counts = table.as_dict
        missing = [lbl for lbl in JAMES_LABELS if lbl not in counts]
        if missing:
            raise ValueError(f'Count table {table.basis_name} lacks settings: {", ".join(missing)}')
        return CoincidenceTable(
            labels=list(JAMES_LABELS),
            counts=[counts[lbl] for lbl in JAMES_LABELS],
            basis_name="james",
            integration_time=table.integration_time,
        )

    def linear_inversion(self, table: CoincidenceTable) -> np.ndarray:
        """sum_nu M_nu n_nu / sum of the normalization-block counts, not yet physical"""
        table = self.to_james_table(table)
        basis = self.james_basis()
        counts = table.as_dict
        n = np.array([counts[lbl] for lbl in basis.labels], dtype=float)
        norm = float(n[:4].sum())
        if norm <= 0.0:
            raise NumericalError('Normalization counts (first four settings) are zero')
        duals = self.dual_frame(basis)
        return sum(m * n_nu for m, n_nu in zip(duals, n)) / norm

    def qst_reconstruct(self, table: CoincidenceTable) -> JointDensityMatrix:
        rho = project_to_density(self.linear_inversion(table))
        return JointDensityMatrix(matrix=rho)

    def expected_counts(
        self,
        rho: StateLike,
        total: float = 1.0,
        mode: CountingMode = CountingMode.SEQUENTIAL,
        integration_time: float = 1.0,
    ) -> CoincidenceTable:
        """Analytic counts total * Tr(P_nu rho); the normalization block sums to total"""
        m = self.qstate_service.as_density(rho).matrix
        if m.shape[0] != 4:
            raise ValueError(f'Tomography acts on two qubits, got dim {m.shape[0]}')
        if mode == CountingMode.SEQUENTIAL:
            settings = self.james_basis().settings
            name = "james"
        else:
            settings = [s for group in self.parallel_settings() for s in group]
            name = "parallel"
        counts = [max(total * float(np.real(np.trace(s.projector() @ m))), 0.0) for s in settings]
        return CoincidenceTable(
            labels=[s.label for s in settings], counts=counts,
            basis_name=name, integration_time=integration_time,
        )

    def fidelity_with_error(
        self,
        table: CoincidenceTable,
        target: StateLike,
        resamples: int = 200,
        seed: int = 0,
    ) -> Tuple[float, float]:
        """Poisson bootstrap of the counts: mean and standard deviation of the fidelity"""
        if resamples < 100:
            raise ValueError(f'At least 100 resamples are required, got {resamples}')
        streams = np.random.SeedSequence(seed).spawn(resamples)
        counts = np.array(table.counts, dtype=float)
        values = np.empty(resamples)
        for i, stream in enumerate(streams):
            rng = np.random.default_rng(stream)
            resampled = CoincidenceTable(
                labels=table.labels,
                counts=rng.poisson(counts).astype(float).tolist(),
                basis_name=table.basis_name,
                integration_time=table.integration_time,
            )
            values[i] = self.qstate_service.fidelity(self.qst_reconstruct(resampled), target)
        logger.debug("Bootstrap over %d resamples: mean %.6f", resamples, values.mean())
        return float(values.mean()), float(values.std(ddof=1))

    def chsh_expected_counts(
        self, rho: StateLike, settings: ChshSettings = ChshSettings(), total: float = 1.0
    ) -> CoincidenceTable:
        """Sixteen polarizer-angle coincidences (each setting and its perpendicular)"""
        m = self.qstate_service.as_density(rho).matrix
        labels, counts = [], []
        for a in settings.alice_angles:
            for b in settings.bob_angles:
                for aa in (a, settings.perpendicular(a)):
                    for bb in (b, settings.perpendicular(b)):
                        proj = MeasurementSetting(
                            label=chsh_label(aa, bb),
                            signal=PolarizationSetting.linear(aa),
                            idler=PolarizationSetting.linear(bb),
                        ).projector()
                        labels.append(chsh_label(aa, bb))
                        counts.append(max(total * float(np.real(np.trace(proj @ m))), 0.0))
        return CoincidenceTable(labels=labels, counts=counts, basis_name="chsh")

    def correlation_E(self, source: CountsOrState, a: float, b: float) -> float:
        """E(a, b) from a two-qubit state or from a polarizer-angle count table"""
        if isinstance(source, CoincidenceTable):
            counts = source.as_dict
            a_perp, b_perp = ChshSettings.perpendicular(a), ChshSettings.perpendicular(b)
            try:
                cc = [counts[chsh_label(x, y)] for x, y in ((a, b), (a, b_perp), (a_perp, b), (a_perp, b_perp))]
            except KeyError as e:
                raise ValueError(f'Count table has no setting {e.args[0]}') from e
            denominator = sum(cc)
            if denominator <= 0.0:
                raise NumericalError(f'No coincidences at settings a={a:g}, b={b:g}')
            return (cc[0] - cc[1] - cc[2] + cc[3]) / denominator
        m = self.qstate_service.as_density(source).matrix
        if m.shape[0] != 4:
            raise ValueError(f'CHSH needs a two-qubit state, got dim {m.shape[0]}')
        value = float(np.real(np.trace(m @ np.kron(polarizer_observable(a), polarizer_observable(b)))))
        return min(max(value, -1.0), 1.0)

    def chsh_report(self, source: CountsOrState, settings: ChshSettings = ChshSettings()) -> ChshReport:
        pairs = {
            "E(a,b)": (settings.a, settings.b),
            "E(a,b')": (settings.a, settings.b_prime),
            "E(a',b)": (settings.a_prime, settings.b),
            "E(a',b')": (settings.a_prime, settings.b_prime),
        }
        e = {key: self.correlation_E(source, x, y) for key, (x, y) in pairs.items()}
        s = e["E(a,b)"] - e["E(a,b')"] + e["E(a',b)"] + e["E(a',b')"]
        return ChshReport(S=s, E_values=e, angles=settings)

    def chsh_S(self, source: CountsOrState, settings: ChshSettings = ChshSettings()) -> float:
        """S = E(a,b) - E(a,b') + E(a',b) + E(a',b')"""
        return self.chsh_report(source, settings).S
