import math

import pytest
from pydantic import ValidationError

from app.models.circuit import CircuitElement, CircuitName, ElementKind, ErrorCase, NamedCircuit, PhaseSetting
from app.models.noise import ChannelBranch, ChannelMix, ErrorKind


class TestPhaseSetting:
    """Test MZI phase settings"""

    def test_phases_wrap(self):
        setting = PhaseSetting(theta=3 * math.pi, psi=-math.pi / 2)
        assert setting.theta == pytest.approx(math.pi)
        assert setting.psi == pytest.approx(3 * math.pi / 2)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            PhaseSetting(theta=float("nan"))

    def test_presets(self):
        assert PhaseSetting.bar().psi == pytest.approx(math.pi)
        assert PhaseSetting.cross().psi == 0.0


class TestCircuitElement:
    """Test element validation and JSON form"""

    def test_mzi_needs_two_ports(self):
        with pytest.raises(ValidationError) as exc_info:
            CircuitElement(kind=ElementKind.MZI, ports=[0])
        assert "needs 2 ports" in str(exc_info.value)

    def test_port_range(self):
        with pytest.raises(ValidationError):
            CircuitElement.crossing(0, 4)

    def test_distinct_ports(self):
        with pytest.raises(ValidationError):
            CircuitElement.crossing(2, 2)

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            CircuitElement(kind=ElementKind.IDENTITY, gain=2.0)

    def test_json_form(self):
        circuit = NamedCircuit(
            name=CircuitName.BF_EGC,
            case=ErrorCase.SPATIAL,
            elements=[CircuitElement.mzi(0, 2, PhaseSetting.cross()), CircuitElement.phase_shift(1, math.pi)],
        )
        payload = circuit.model_dump(mode="json")
        assert payload["elements"][0] == {"kind": "mzi", "ports": [0, 2], "theta": 0.0, "psi": 0.0}
        assert NamedCircuit.model_validate(payload) == circuit
        assert circuit.description == "bf_egc[spatial]"


class TestChannelMix:
    """Test channel mixtures"""

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ValidationError) as exc_info:
            ChannelMix(branches=[ChannelBranch(p=0.5, kind=ErrorKind.NONE), ChannelBranch(p=0.4, kind=ErrorKind.BF_POL)])
        assert "sum to" in str(exc_info.value)

    def test_needs_a_branch(self):
        with pytest.raises(ValidationError):
            ChannelMix(branches=[])

    def test_accessors(self):
        mix = ChannelMix(branches=[ChannelBranch(p=0.75, kind=ErrorKind.NONE), ChannelBranch(p=0.25, kind=ErrorKind.PF_SPA)])
        assert mix.probabilities == [0.75, 0.25]
        assert mix.kinds == [ErrorKind.NONE, ErrorKind.PF_SPA]
