import numpy as np
import pytest
from scipy.stats import unitary_group

from app.models.noise import WernerParam
from app.models.state import BellKind, DegreeOfFreedom, JointDensityMatrix, JointState
from app.services.noise_service import NoiseService
from app.services.qstate_service import QStateService


class TestQStateService:
    """Test state construction, partial traces and fidelity"""

    @pytest.fixture
    def service(self):
        return QStateService()

    @pytest.fixture
    def phi_plus(self, service):
        return service.bell_density(BellKind.PHI_PLUS)

    def test_hyper_state_is_product_of_phi_plus(self, service):
        """1/2(|00>+|11>+|22>+|33>) equals phi+ (x) Phi+ in path ordering"""
        hyper = service.hyper_state()
        product = service.hyper_bell_state(BellKind.PHI_PLUS, BellKind.PHI_PLUS)
        assert np.allclose(hyper.amplitudes, product.amplitudes)

    def test_hyper_bell_state_terms(self, service):
        """phi+ spatial with Psi+ polarization populates |01>, |10>, |23>, |32>"""
        state = service.hyper_bell_state(BellKind.PHI_PLUS, BellKind.PSI_PLUS)
        populated = {(i // 4, i % 4) for i in np.flatnonzero(np.abs(state.amplitudes) > 1e-12)}
        assert populated == {(0, 1), (1, 0), (2, 3), (3, 2)}

    @pytest.mark.parametrize("dof", [DegreeOfFreedom.POLARIZATION, DegreeOfFreedom.SPATIAL])
    def test_partial_trace_of_hyper_state(self, service, phi_plus, dof):
        reduced = service.partial_trace(service.hyper_state(), dof)
        assert service.fidelity(reduced, phi_plus) == pytest.approx(1.0, abs=1e-12)

    def test_partial_trace_keeps_the_right_dof(self, service):
        state = service.hyper_bell_state(BellKind.PSI_MINUS, BellKind.PHI_MINUS)
        spatial = service.partial_trace(state, DegreeOfFreedom.SPATIAL)
        polar = service.partial_trace(state, DegreeOfFreedom.POLARIZATION)
        assert service.fidelity(spatial, service.bell_density(BellKind.PSI_MINUS)) == pytest.approx(1.0)
        assert service.fidelity(polar, service.bell_density(BellKind.PHI_MINUS)) == pytest.approx(1.0)

    def test_compose_then_trace(self, service):
        """Tracing a composed product state returns each factor"""
        werner = NoiseService().werner_state
        rho_s = werner(WernerParam(F=0.9))
        rho_p = werner(WernerParam(F=0.7))
        joint = service.compose_dofs(rho_s, rho_p)
        assert np.allclose(service.partial_trace(joint, DegreeOfFreedom.SPATIAL).matrix, rho_s.matrix)
        assert np.allclose(service.partial_trace(joint, DegreeOfFreedom.POLARIZATION).matrix, rho_p.matrix)

    def test_compose_rejects_wrong_dims(self, service):
        with pytest.raises(ValueError):
            service.compose_dofs(JointDensityMatrix.maximally_mixed(16), JointDensityMatrix.maximally_mixed(4))

    def test_fidelity_orthogonal_states(self, service):
        assert service.fidelity(
            service.bell_density(BellKind.PHI_PLUS), service.bell_density(BellKind.PSI_MINUS)
        ) == pytest.approx(0.0, abs=1e-12)

    def test_fidelity_with_mixed_state(self, service, phi_plus):
        assert service.fidelity(JointDensityMatrix.maximally_mixed(4), phi_plus) == pytest.approx(0.25)

    def test_fidelity_is_symmetric(self, service):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = JointDensityMatrix(matrix=a @ a.conj().T / np.trace(a @ a.conj().T))
        sigma = JointDensityMatrix(matrix=b @ b.conj().T / np.trace(b @ b.conj().T))
        assert service.fidelity(rho, sigma) == pytest.approx(service.fidelity(sigma, rho), abs=1e-8)

    def test_fidelity_against_bell_target_is_exact(self, service, phi_plus):
        """A pure target reduces the fidelity to <psi|rho|psi> without square-root error"""
        noise = NoiseService()
        werner = noise.werner_state(WernerParam(F=0.912))
        assert service.fidelity(werner, phi_plus) == pytest.approx(0.912, abs=1e-12)
        low = noise.werner_state(WernerParam(F=0.3))
        assert service.fidelity(phi_plus, low) == pytest.approx(0.3, abs=1e-12)
        assert service.fidelity(low, phi_plus) == pytest.approx(service.fidelity(phi_plus, low), abs=1e-12)

    def test_fidelity_pure_matches_overlap(self, service):
        u = unitary_group.rvs(4, random_state=21)
        psi = JointState(amplitudes=u[:, 0], dims=(2, 2))
        rho = JointDensityMatrix(matrix=u @ np.diag([0.5, 0.3, 0.15, 0.05]) @ u.conj().T)
        expected = float(np.real(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)))
        assert service.fidelity(rho, psi) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.5, abs=1e-12)

    def test_fidelity_dimension_mismatch(self, service, phi_plus):
        with pytest.raises(ValueError) as exc_info:
            service.fidelity(JointDensityMatrix.maximally_mixed(16), phi_plus)
        assert "Dimension mismatch" in str(exc_info.value)

    def test_as_density_rejects_residue(self, service):
        residue = JointState(amplitudes=[0.5, 0, 0, 0], dims=(2, 2), normalized=False)
        with pytest.raises(ValueError):
            service.as_density(residue)

    def test_apply_random_unitary_preserves_trace_and_purity(self, service):
        u_s = unitary_group.rvs(4, random_state=1)
        u_i = unitary_group.rvs(4, random_state=2)
        rho = service.as_density(service.hyper_state())
        out = service.apply_unitary(rho, u_s, u_i)
        assert np.trace(out.matrix).real == pytest.approx(1.0)
        assert out.purity == pytest.approx(1.0)

    def test_apply_unitary_pure_and_mixed_agree(self, service):
        u_s = unitary_group.rvs(4, random_state=5)
        u_i = unitary_group.rvs(4, random_state=6)
        state = service.hyper_state()
        pure_out = service.apply_unitary(state, u_s, u_i)
        mixed_out = service.apply_unitary(service.as_density(state), u_s, u_i)
        assert np.allclose(JointDensityMatrix.from_state(pure_out).matrix, mixed_out.matrix)

    def test_apply_non_unitary(self, service):
        with pytest.raises(ValueError) as exc_info:
            service.apply_unitary(service.hyper_state(), 2 * np.eye(4), np.eye(4))
        assert "not unitary" in str(exc_info.value)

    def test_single_photon_state_of_hyper_state(self, service):
        assert np.allclose(service.single_photon_state(service.hyper_state()), np.eye(4) / 4)
