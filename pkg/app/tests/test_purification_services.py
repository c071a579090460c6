import math

import numpy as np
import pytest

from app.errors import NumericalError
from app.models.purification import Collection
from app.models.state import BellKind, DegreeOfFreedom, JointDensityMatrix
from app.services.noise_service import NoiseService
from app.services.purification_service import PurificationService
from app.services.qstate_service import QStateService


class TestPurify:
    """Test the density-matrix purification pipeline"""

    @pytest.fixture
    def service(self):
        return PurificationService()

    @pytest.fixture
    def noise(self):
        return NoiseService()

    @pytest.fixture
    def hyper(self):
        qstate = QStateService()
        return qstate.as_density(qstate.hyper_state())

    def test_noiseless_pair_survives_unchanged(self, service, hyper):
        outcome = service.purify(hyper)
        assert service.post_fidelity(outcome) == pytest.approx(1.0)
        assert outcome.success_probability == pytest.approx(0.5)
        assert outcome.single_photon_probability == pytest.approx(0.0, abs=1e-12)

    def test_both_parallel_collects_everything(self, service, hyper):
        outcome = service.purify(hyper, Collection.BOTH_PARALLEL)
        assert outcome.success_probability == pytest.approx(1.0)
        assert service.post_fidelity(outcome) == pytest.approx(1.0)

    def test_second_pair_matches_first(self, service, noise, hyper):
        noisy = noise.apply_channel_mix(hyper, noise.bf_channel_mix(0.2))
        first = service.purify(noisy, Collection.FIRST_PAIR)
        second = service.purify(noisy, Collection.SECOND_PAIR)
        assert service.post_fidelity(second) == pytest.approx(service.post_fidelity(first))

    def test_bit_flip_twenty_percent(self, service, noise, hyper):
        """F = 0.8 per qubit purifies to 16/17"""
        noisy = noise.apply_channel_mix(hyper, noise.bf_channel_mix(0.2))
        outcome = service.purify(noisy)
        assert service.post_fidelity(outcome) == pytest.approx(16 / 17, abs=1e-12)
        assert outcome.success_probability == pytest.approx(0.34)
        assert outcome.single_photon_probability == pytest.approx(0.32)
        assert outcome.rejected_probability == pytest.approx(0.66)

    def test_phase_flip_twenty_percent(self, service, noise, hyper):
        noisy = noise.apply_channel_mix(hyper, noise.pf_channel_mix(0.2))
        assert service.post_fidelity(service.purify_pf(noisy)) == pytest.approx(16 / 17, abs=1e-12)

    def test_phase_flip_needs_hadamard(self, service, noise, hyper):
        """Without the Hadamard layers phase flips pass through unfiltered"""
        noisy = noise.apply_channel_mix(hyper, noise.pf_channel_mix(0.2))
        assert service.post_fidelity(service.purify(noisy)) == pytest.approx(0.68, abs=1e-12)

    @pytest.mark.parametrize("p", [0.05, 0.1, 0.3, 0.45])
    def test_matches_closed_form(self, service, noise, hyper, p):
        noisy = noise.apply_channel_mix(hyper, noise.bf_channel_mix(p))
        expected = service.theoretical_fidelity_bf(1 - p, 1 - p)
        assert service.post_fidelity(service.purify(noisy)) == pytest.approx(expected, abs=1e-12)

    def test_werner_pair_matches_closed_form(self, service, noise):
        rho = noise.werner_hyper_state(0.8, 0.8)
        assert service.post_fidelity(service.purify(rho)) == pytest.approx(0.838150, abs=1e-6)

    def test_pure_error_gives_no_coincidence(self, service):
        """A single spatial flip with no polarization flip never yields a coincidence"""
        qstate = QStateService()
        rho = qstate.as_density(qstate.hyper_bell_state(BellKind.PSI_PLUS, BellKind.PHI_PLUS))
        outcome = service.purify(rho)
        assert not outcome.has_coincidences
        assert outcome.single_photon_probability == pytest.approx(1.0)
        with pytest.raises(NumericalError):
            service.post_fidelity(outcome)

    def test_rejects_two_qubit_input(self, service):
        with pytest.raises(ValueError):
            service.purify(JointDensityMatrix.maximally_mixed(4))

    def test_post_state_is_polarization_qubit(self, service, noise, hyper):
        noisy = noise.apply_channel_mix(hyper, noise.bf_channel_mix(0.1))
        outcome = service.purify(noisy)
        assert outcome.post_state.dim == 4
        assert np.trace(outcome.post_state.matrix).real == pytest.approx(1.0)


class TestClosedForms:
    """Test the closed-form purified fidelities"""

    @pytest.fixture
    def service(self):
        return PurificationService()

    def test_bit_flip_formula(self, service):
        assert service.theoretical_fidelity_bf(0.8, 0.8) == pytest.approx(16 / 17)
        assert service.theoretical_fidelity_bf(0.75, 0.75) == pytest.approx(0.9)
        assert service.theoretical_fidelity_bf(0.5, 0.5) == pytest.approx(0.5)

    def test_bit_flip_asymmetric(self, service):
        assert service.theoretical_fidelity_bf(0.9, 0.7) == pytest.approx(0.63 / (0.63 + 0.03))

    def test_bit_flip_undefined(self, service):
        with pytest.raises(NumericalError):
            service.theoretical_fidelity_bf(1.0, 0.0)

    def test_bit_flip_range(self, service):
        with pytest.raises(ValueError):
            service.theoretical_fidelity_bf(1.2, 0.5)

    def test_werner_formula(self, service):
        assert service.theoretical_fidelity_werner(0.8) == pytest.approx(0.838150, abs=1e-6)
        assert service.theoretical_fidelity_werner(1.0) == pytest.approx(1.0)

    def test_gain_peak(self, service):
        """The gain F' - F peaks near 0.743 at about 0.150"""
        peak, gain = service.fidelity_gain_peak()
        assert peak == pytest.approx(0.5 + math.sqrt(math.sqrt(5) - 2) / 2)
        assert peak == pytest.approx(0.742934, abs=1e-6)
        assert gain == pytest.approx(0.150142, abs=1e-6)
        grid = np.linspace(0.5, 1.0, 5001)
        gains = [service.theoretical_fidelity_bf(F, F) - F for F in grid]
        assert grid[int(np.argmax(gains))] == pytest.approx(peak, abs=2e-4)
        assert gain >= max(gains) - 1e-12


class TestSyndromeTable:
    """Test the error syndrome table"""

    @pytest.fixture
    def service(self):
        return PurificationService()

    @pytest.fixture
    def rows(self, service):
        return service.syndrome_table(0.8)

    def test_sixteen_rows_summing_to_one(self, rows):
        assert len(rows) == 16
        assert math.fsum(r.probability for r in rows) == pytest.approx(1.0)

    def test_coincidence_rule(self, rows):
        """Coincidence exactly when both qubits belong to the same Bell family"""
        for row in rows:
            assert row.coincidence == (row.spatial_bell.kind.is_phi == row.polar_bell.kind.is_phi)
            if not row.coincidence:
                assert row.post_label == "none"
        assert sum(r.coincidence for r in rows) == 8

    def test_post_labels(self, rows):
        by_pair = {(r.spatial_bell.symbol, r.polar_bell.symbol): r for r in rows}
        assert by_pair[("phi+", "Phi+")].post_label == "Phi+"
        assert by_pair[("phi-", "Phi-")].post_label == "Phi+"
        assert by_pair[("phi-", "Phi+")].post_label == "Phi-"
        assert by_pair[("psi-", "Psi-")].post_label == "Psi+"
        assert by_pair[("psi+", "Psi-")].post_label == "Psi-"

    def test_hd_states(self, rows):
        by_pair = {(r.spatial_bell.symbol, r.polar_bell.symbol): r for r in rows}
        assert by_pair[("phi+", "Phi+")].hd_state == "|11>+|33>+|22>+|00>"
        assert by_pair[("phi+", "Psi+")].hd_state == "|13>+|31>+|20>+|02>"

    def test_werner_probabilities(self, rows):
        by_pair = {(r.spatial_bell.symbol, r.polar_bell.symbol): r for r in rows}
        assert by_pair[("phi+", "Phi+")].probability == pytest.approx(0.64)
        assert by_pair[("psi-", "Phi+")].probability == pytest.approx(0.8 * 0.2 / 3)

    def test_fidelity_matches_closed_form(self, service):
        for F in np.linspace(0.25, 1.0, 31):
            rows = service.syndrome_table(float(F))
            assert service.syndrome_fidelity(rows) == pytest.approx(service.theoretical_fidelity_werner(float(F)), abs=1e-12)

    def test_success(self, service, rows):
        accepted = 0.8 ** 2 + 2 * 0.8 * 0.2 / 3 + 5 * 0.2 ** 2 / 9
        assert service.syndrome_success(rows) == pytest.approx(accepted / 2)
        assert service.syndrome_success(rows, Collection.BOTH_PARALLEL) == pytest.approx(accepted)

    def test_weights_must_sum_to_one(self, service):
        with pytest.raises(ValueError):
            service.syndrome_rows({(BellKind.PHI_PLUS, BellKind.PHI_PLUS): 0.5})

    def test_random_mixtures_agree_with_syndrome_table(self, service):
        """Purifying 1000 random hyper-Bell mixtures matches the syndrome accumulation"""
        rng = np.random.default_rng(2024)
        keys = [(s, p) for s in BellKind for p in BellKind]
        for _ in range(1000):
            weights = dict(zip(keys, rng.dirichlet(np.ones(16)).tolist()))
            outcome = service.purify(service.bell_mixture(weights))
            expected = service.syndrome_fidelity(service.syndrome_rows(weights))
            assert service.post_fidelity(outcome) == pytest.approx(expected, abs=1e-10)

    def test_bell_mixture_agrees_with_pipeline(self, service):
        """Purifying the mixture reproduces the syndrome-table fidelity"""
        weights = service.werner_weights(0.7)
        rho = service.bell_mixture(weights)
        pipeline = service.post_fidelity(service.purify(rho))
        assert pipeline == pytest.approx(service.syndrome_fidelity(service.syndrome_rows(weights)), abs=1e-12)
        qstate = QStateService()
        polar = qstate.partial_trace(rho, DegreeOfFreedom.POLARIZATION)
        assert qstate.fidelity(polar, qstate.bell_density(BellKind.PHI_PLUS)) == pytest.approx(0.7)
