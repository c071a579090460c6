import numpy as np
import pytest

from app.models.noise import ChannelBranch, ChannelMix, ErrorKind, WernerParam
from app.models.state import BellKind, DegreeOfFreedom, JointDensityMatrix
from app.services.noise_service import NoiseService
from app.services.qstate_service import QStateService


class TestNoiseService:
    """Test flip channels and Werner states"""

    @pytest.fixture
    def service(self):
        return NoiseService()

    @pytest.fixture
    def qstate(self):
        return QStateService()

    @pytest.fixture
    def hyper(self, qstate):
        return qstate.as_density(qstate.hyper_state())

    def test_bit_flip_weights(self, service):
        mix = service.bf_channel_mix(0.2)
        assert mix.kinds == [ErrorKind.NONE, ErrorKind.BF_POL, ErrorKind.BF_SPA, ErrorKind.BF_BOTH]
        assert mix.probabilities == pytest.approx([0.64, 0.16, 0.16, 0.04])

    def test_zero_weight_branches_dropped(self, service):
        assert service.pf_channel_mix(0.0).kinds == [ErrorKind.NONE]
        assert service.bf_channel_mix(1.0).kinds == [ErrorKind.BF_BOTH]

    def test_rejects_bad_probability(self, service):
        with pytest.raises(ValueError):
            service.bf_channel_mix(1.5)

    def test_bit_flip_lowers_each_dof_to_one_minus_p(self, service, qstate, hyper):
        noisy = service.apply_channel_mix(hyper, service.bf_channel_mix(0.2))
        phi = qstate.bell_density(BellKind.PHI_PLUS)
        for dof in DegreeOfFreedom:
            assert qstate.fidelity(qstate.partial_trace(noisy, dof), phi) == pytest.approx(0.8)

    def test_phase_flip_produces_phi_minus(self, service, qstate, hyper):
        noisy = service.apply_channel_mix(hyper, service.pf_channel_mix(0.3))
        polar = qstate.partial_trace(noisy, DegreeOfFreedom.POLARIZATION)
        assert qstate.fidelity(polar, qstate.bell_density(BellKind.PHI_MINUS)) == pytest.approx(0.3)

    def test_channel_preserves_trace(self, service, hyper):
        noisy = service.apply_channel_mix(hyper, service.pf_channel_mix(0.37))
        assert np.trace(noisy.matrix).real == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [0.0, 0.1, 0.37, 0.5, 1.0])
    def test_channels_are_unital(self, service, p):
        mixed = JointDensityMatrix.maximally_mixed(16)
        for mix in (service.bf_channel_mix(p), service.pf_channel_mix(p)):
            out = service.apply_channel_mix(mixed, mix)
            assert np.allclose(out.matrix, np.eye(16) / 16, atol=1e-12)

    def test_signal_side_errors(self, service, qstate, hyper):
        """A flip on both photons cancels for a Phi+ pair"""
        mix = ChannelMix(branches=[ChannelBranch(p=1.0, kind=ErrorKind.BF_POL, signal_kind=ErrorKind.BF_POL)])
        out = service.apply_channel_mix(hyper, mix)
        assert qstate.fidelity(out, hyper) == pytest.approx(1.0)

    def test_channel_rejects_two_qubit_state(self, service, qstate):
        with pytest.raises(ValueError):
            service.apply_channel_mix(qstate.bell_density(BellKind.PHI_PLUS), service.bf_channel_mix(0.1))

    def test_sample_branches_frequencies(self, service):
        mix = service.bf_channel_mix(0.2)
        draws = service.sample_branches(mix, 200000, np.random.default_rng(8))
        freq = np.bincount(draws, minlength=4) / draws.size
        assert freq == pytest.approx([0.64, 0.16, 0.16, 0.04], abs=0.005)

    def test_sample_branches_reproducible(self, service):
        mix = service.pf_channel_mix(0.4)
        a = service.sample_branches(mix, 100, np.random.default_rng(1))
        b = service.sample_branches(mix, 100, np.random.default_rng(1))
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("F", [0.25, 0.6, 0.912, 1.0])
    def test_werner_fidelity(self, service, qstate, F):
        rho = service.werner_state(WernerParam(F=F))
        assert qstate.fidelity(rho, qstate.bell_density(BellKind.PHI_PLUS)) == pytest.approx(F)

    def test_werner_hyper_state_marginals(self, service, qstate):
        rho = service.werner_hyper_state(0.927, 0.912)
        phi = qstate.bell_density(BellKind.PHI_PLUS)
        assert qstate.fidelity(qstate.partial_trace(rho, DegreeOfFreedom.SPATIAL), phi) == pytest.approx(0.927)
        assert qstate.fidelity(qstate.partial_trace(rho, DegreeOfFreedom.POLARIZATION), phi) == pytest.approx(0.912)

    def test_error_unitary_none(self, service):
        assert np.allclose(service.error_unitary(ErrorKind.NONE), np.eye(4))
