import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from ..errors import NumericalError
from ..models.analysis import CoincidenceTable, CountingMode, MeasurementSetting
from ..models.circuit import ChipSetup
from ..models.counting import DetectionModel, G2Histogram, SourceParams
from ..models.noise import ChannelBranch, ChannelMix, ErrorKind
from ..models.purification import Collection
from ..models.state import JointDensityMatrix
from .analysis_service import AnalysisService
from .circuit_service import CircuitService
from .noise_service import NoiseService
from .purification_service import PurificationService
from .qstate_service import QStateService, StateLike

logger = logging.getLogger(__name__)

# Loss budgets and rates of the chip-to-chip measurement
MEASURED_SIGNAL_LOSS_DB = 24.8
MEASURED_IDLER_LOSS_DB = 47.0
MEASURED_COINCIDENCE_RATE = 10.38   # Hz
MEASURED_DARK_RATE = 200.0          # Hz
MEASURED_REP_RATE = 9.95e9          # Hz

_XI_BRACKET = (1e-12, 1.0 - 1e-12)

_IDENTITY_MIX = ChannelMix(branches=[ChannelBranch(p=1.0, kind=ErrorKind.NONE)])

_SINGLE_MODE_INDICES = {
    Collection.FIRST_PAIR: [0, 1],
    Collection.SECOND_PAIR: [2, 3],
}


class CountingService:
    """Monte-Carlo coincidence statistics and source characterization formulas"""

    def __init__(self):
        self.qstate_service = QStateService()
        self.circuit_service = CircuitService()
        self.noise_service = NoiseService()
        self.purification_service = PurificationService()
        self.analysis_service = AnalysisService()

    # -- loss budget ---------------------------------------------------------

    def db_to_linear(self, loss_db: float) -> float:
        if loss_db < 0:
            raise ValueError(f'Loss must be non-negative, got {loss_db} dB')
        return 10 ** (-loss_db / 10)

    def singles_rates(self, model: DetectionModel) -> Dict[str, float]:
        return {
            "signal [Hz]": model.pair_rate * model.signal_detection + model.dark_rate,
            "idler [Hz]": model.pair_rate * model.idler_detection + model.dark_rate,
            "coincidence [Hz]": model.pair_rate * model.signal_detection * model.idler_detection,
        }

    def calibrate_pair_rate(self, coincidence_rate: float, model: DetectionModel) -> float:
        """Pair rate that makes the loss budget produce the observed coincidence rate"""
        both = model.signal_detection * model.idler_detection
        if both <= 0.0:
            raise NumericalError('Detection probability is zero; pair rate cannot be calibrated')
        return coincidence_rate / both

    def measured_detection_model(self) -> DetectionModel:
        """Loss budgets of the measurement with the pair rate calibrated to 10.38 Hz"""
        uncalibrated = DetectionModel(
            pair_rate=0.0,
            signal_efficiency=self.db_to_linear(MEASURED_SIGNAL_LOSS_DB),
            idler_efficiency=self.db_to_linear(MEASURED_IDLER_LOSS_DB),
            dark_rate=MEASURED_DARK_RATE,
            detector_efficiency=1.0,  # included in the loss budgets
            rep_rate=MEASURED_REP_RATE,
        )
        rate = self.calibrate_pair_rate(MEASURED_COINCIDENCE_RATE, uncalibrated)
        return uncalibrated.model_copy(update={"pair_rate": rate})

    # -- source characterization ---------------------------------------------

    def inverse_car(self, xi: float, a: float) -> float:
        """1/CAR = (1 - a^2 xi^2) xi^2 / ((1 + a xi^2)(1 - a xi^2))"""
        x = xi * xi
        return (1 - a * a * x) * x / ((1 + a * x) * (1 - a * x))

    def car_from_model(self, model: DetectionModel, xi: float) -> float:
        """CAR of a two-mode squeezed source with a = 1 - eta"""
        if not 0.0 < xi < 1.0:
            raise ValueError(f'Squeezing parameter must be in (0, 1), got {xi}')
        return 1.0 / self.inverse_car(xi, 1.0 - model.eta)

    def xi_from_car(self, car: float, a: float) -> float:
        if car <= 1.0:
            raise ValueError(f'CAR must exceed 1, got {car}')
        if not 0.0 <= a <= 1.0:
            raise ValueError(f'Loss parameter a must be in [0, 1], got {a}')
        target = 1.0 / car
        lo, hi = _XI_BRACKET
        f_lo = self.inverse_car(lo, a) - target
        f_hi = self.inverse_car(hi, a) - target
        if f_lo * f_hi > 0:
            raise NumericalError(f'No squeezing parameter in (0, 1) gives CAR {car} at a={a}')
        return float(brentq(lambda xi: self.inverse_car(xi, a) - target, lo, hi, xtol=1e-15, rtol=1e-15))

    def simulate_car(
        self, model: DetectionModel, xi: float, pulses: int, seed: int
    ) -> Tuple[float, int, int]:
        """Threshold-detector CAR from sampled pair numbers: (CAR, same-pulse cc, adjacent-pulse cc)"""
        if not 0.0 < xi < 1.0:
            raise ValueError(f'Squeezing parameter must be in (0, 1), got {xi}')
        rng = np.random.default_rng(seed)
        pairs = rng.geometric(1.0 - xi * xi, size=pulses) - 1
        p_dark = model.dark_rate * model.coincidence_window
        signal = (rng.binomial(pairs, model.signal_detection) > 0) | (rng.random(pulses) < p_dark)
        idler = (rng.binomial(pairs, model.idler_detection) > 0) | (rng.random(pulses) < p_dark)
        cc0 = int(np.count_nonzero(signal & idler))
        cc1 = int(np.count_nonzero(signal[:-1] & idler[1:]))
        if cc1 == 0:
            raise NumericalError('No accidental coincidences recorded; increase the number of pulses')
        return cc0 / cc1, cc0, cc1

    def purity_from_g2(self, g2: float) -> Tuple[float, float]:
        """Schmidt number K = 1/(g2 - 1) and purity P = 1/K"""
        if not 1.0 < g2 <= 2.0:
            raise ValueError(f'g2 must be in (1, 2], got {g2}')
        params = SourceParams(xi=0.0, schmidt_K=1.0 / (g2 - 1.0))
        return params.schmidt_K, params.purity

    def true_g2(self, g2_raw: float, leakage: float) -> float:
        """Undo the symmetric leakage of the central peak into its two neighbours"""
        return (g2_raw - 2 * leakage) / (1 - 2 * leakage)

    def simulate_g2_histogram(
        self, g2: float, leakage: float, seed: int, num_peaks: int = 9, counts_per_peak: float = 1e7
    ) -> G2Histogram:
        """Poisson peak areas; each peak leaks a fraction `leakage` into each neighbour"""
        center = num_peaks // 2
        ideal = np.ones(num_peaks)
        ideal[center] = g2
        smeared = (1 - 2 * leakage) * ideal
        smeared[1:] += leakage * ideal[:-1]
        smeared[:-1] += leakage * ideal[1:]
        # edges receive what their missing outer neighbour would have leaked
        smeared[0] += leakage
        smeared[-1] += leakage
        rng = np.random.default_rng(seed)
        peaks = rng.poisson(counts_per_peak * smeared).astype(float)
        return G2Histogram(peaks=peaks.tolist(), center_index=center)

    def g2_from_histogram(self, histogram: G2Histogram) -> Tuple[float, float]:
        """(raw, corrected) g2; the correction adds the excess of the two adjacent peaks"""
        peaks = np.array(histogram.peaks)
        c = histogram.center_index
        far = [p for i, p in enumerate(peaks) if abs(i - c) >= 2]
        baseline = float(np.mean(far))
        if baseline <= 0.0:
            raise NumericalError('Side peaks are empty; g2 is undefined')
        raw = peaks[c] / baseline
        corrected = (peaks[c] + (peaks[c - 1] - baseline) + (peaks[c + 1] - baseline)) / baseline
        return float(raw), float(corrected)

    # -- coincidence counting ------------------------------------------------

    def _collected(
        self, rho: JointDensityMatrix, collection: Collection
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unnormalized two-qubit block and single-photon marginals of the collected waveguides"""
        if rho.dim == 4:
            m = rho.matrix
            t = m.reshape(2, 2, 2, 2)
            return m, np.einsum('ajbj->ab', t), np.einsum('jajb->ab', t)
        block = self.purification_service.collect_block(rho.matrix, collection)
        t = rho.matrix.reshape(4, 4, 4, 4)
        signal = np.einsum('ajbj->ab', t)
        idler = np.einsum('jajb->ab', t)
        if collection == Collection.BOTH_PARALLEL:
            keep = [_SINGLE_MODE_INDICES[Collection.FIRST_PAIR], _SINGLE_MODE_INDICES[Collection.SECOND_PAIR]]
        else:
            keep = [_SINGLE_MODE_INDICES[collection]]
        s_block = sum(signal[np.ix_(k, k)] for k in keep)
        i_block = sum(idler[np.ix_(k, k)] for k in keep)
        return block, s_block, i_block

    def _settings(self, mode: CountingMode) -> List[List[MeasurementSetting]]:
        if mode == CountingMode.SEQUENTIAL:
            return [[s] for s in self.analysis_service.james_basis().settings]
        return self.analysis_service.parallel_settings()

    def simulate_counts(
        self,
        rho: StateLike,
        setup: ChipSetup,
        mode: CountingMode,
        model: DetectionModel,
        duration: float,
        seed: int,
        mix: Optional[ChannelMix] = None,
        collection: Collection = Collection.FIRST_PAIR,
    ) -> CoincidenceTable:
        """Coincidence counts per measurement setting, each setting integrated for `duration`

        A 16-dim state passes the channel branches and the chip circuits before the
        collected pair is measured; a 4-dim state is taken as already collected.
        Pairs are Poisson per setting and split over noise branches; accidentals come
        from multi-pair emission and dark counts inside the coincidence window.
        """
        if duration <= 0:
            raise ValueError(f'Duration must be positive, got {duration}')
        state = self.qstate_service.as_density(rho)
        mix = mix or _IDENTITY_MIX
        if state.dim == 4 and mix is not _IDENTITY_MIX:
            raise ValueError('Channel branches act on the 16-dim state, got an already collected pair')

        branch_views = []
        if state.dim == 16:
            u_signal, u_idler = self.circuit_service.compile_setup(setup)
            for branch in mix.branches:
                single = ChannelMix(branches=[ChannelBranch(p=1.0, kind=branch.kind, signal_kind=branch.signal_kind)])
                noisy = self.noise_service.apply_channel_mix(state, single)
                post = self.qstate_service.apply_unitary(noisy, u_signal, u_idler)
                branch_views.append(self._collected(post, collection))
        else:
            branch_views.append(self._collected(state, collection))
        probabilities = np.array(mix.probabilities) / sum(mix.probabilities)

        eta_both = model.signal_detection * model.idler_detection
        p_dark = model.dark_rate * model.coincidence_window
        mu = model.multipair_xi ** 2
        n_pulses = duration * model.rep_rate
        mean_pairs = duration * model.pair_rate

        groups = self._settings(mode)
        streams = np.random.SeedSequence(seed).spawn(len(groups))
        labels, counts = [], []
        for group, stream in zip(groups, streams):
            rng = np.random.default_rng(stream)
            pairs = rng.poisson(mean_pairs)
            per_branch = np.bincount(
                self.noise_service.sample_branches(mix, pairs, rng), minlength=len(mix.branches)
            )
            true = np.zeros(len(group), dtype=np.int64)
            for n_b, (block, _, _) in zip(per_branch, branch_views):
                q = np.array([max(float(np.real(np.trace(s.projector() @ block))), 0.0) for s in group]) * eta_both
                q = np.append(q, max(1.0 - q.sum(), 0.0))
                true += rng.multinomial(n_b, q / q.sum())[:-1]
            for k, setting in enumerate(group):
                acc_mean = 0.0
                for p_b, (_, s_block, i_block) in zip(probabilities, branch_views):
                    p_s = max(float(np.real(setting.signal.vector.conj() @ s_block @ setting.signal.vector)), 0.0)
                    p_i = max(float(np.real(setting.idler.vector.conj() @ i_block @ setting.idler.vector)), 0.0)
                    acc_mean += p_b * (mu * model.signal_detection * p_s + p_dark) * (mu * model.idler_detection * p_i + p_dark)
                accidentals = rng.poisson(n_pulses * acc_mean) if acc_mean > 0 else 0
                labels.append(setting.label)
                counts.append(float(true[k] + accidentals))
        logger.debug("Simulated %d settings (%s), %.3e pairs per setting", len(groups), mode.value, mean_pairs)
        return CoincidenceTable(
            labels=labels,
            counts=counts,
            basis_name="james" if mode == CountingMode.SEQUENTIAL else "parallel",
            integration_time=duration,
        )
