import pytest
from pydantic import ValidationError

from app.models.experiment import (
    REQUIRED_PARAMETERS, ExperimentConfig, ExperimentKind, ExperimentParameters, FidelityGrid
)


class TestExperimentConfig:
    """Test experiment configuration documents"""

    def test_minimal_config(self):
        config = ExperimentConfig.model_validate({"experiment": "bf_curve"})
        assert config.experiment == ExperimentKind.BF_CURVE
        assert config.seed is None

    def test_full_config(self):
        config = ExperimentConfig.model_validate({
            "experiment": "bf_purify",
            "seed": 3,
            "parameters": {"p": 0.2, "pairs_per_setting": 1000, "collection": "both_parallel"},
        })
        assert config.parameters.p == 0.2
        assert config.parameters.collection.value == "both_parallel"

    def test_missing_required_parameter(self):
        with pytest.raises(ValidationError) as exc_info:
            ExperimentConfig.model_validate({"experiment": "syndrome_table", "parameters": {}})
        assert "requires parameters: F" in str(exc_info.value)

    def test_unknown_experiment(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"experiment": "teleport"})

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"experiment": "bf_curve", "parameters": {"q": 1}})
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"experiment": "bf_curve", "notes": "x"})

    def test_negative_seed(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(experiment=ExperimentKind.BF_CURVE, seed=-1)

    def test_every_kind_has_requirements(self):
        assert set(REQUIRED_PARAMETERS) == set(ExperimentKind)


class TestExperimentParameters:
    """Test parameter validation"""

    def test_probability_range(self):
        with pytest.raises(ValidationError):
            ExperimentParameters(p=1.2)

    def test_p_values(self):
        with pytest.raises(ValidationError):
            ExperimentParameters(p_values=[])
        with pytest.raises(ValidationError) as exc_info:
            ExperimentParameters(p_values=[0.1, -0.2])
        assert "outside [0, 1]" in str(exc_info.value)

    def test_g2_range(self):
        with pytest.raises(ValidationError):
            ExperimentParameters(g2_raw=2.2)

    def test_resamples_minimum(self):
        with pytest.raises(ValidationError):
            ExperimentParameters(resamples=10)

    def test_grid_order(self):
        with pytest.raises(ValidationError):
            FidelityGrid(start=0.9, stop=0.5)
        assert FidelityGrid().num == 301
