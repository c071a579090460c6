"""
Tests for experiment API endpoints using TestClient.
"""

import pytest
from fastapi.testclient import TestClient
from unittest.mock import patch

from app.errors import NumericalError


class TestExperimentEndpoints:
    """Test experiment API endpoints."""

    @pytest.fixture
    def client(self):
        """Create test client."""
        from app.main import app
        return TestClient(app)

    def test_run_endpoint(self, client):
        """Test POST /api/v1/experiments/run endpoint."""
        response = client.post(
            "/api/v1/experiments/run",
            json={"experiment": "bf_purify", "seed": 2, "parameters": {"p": 0.2}},
        )
        assert response.status_code == 200
        data = response.json()
        assert data["experiment"] == "bf_purify"
        assert data["seed"] == 2
        assert data["results"]["fidelity_after"] == pytest.approx(16 / 17)

    def test_run_seed_query(self, client):
        response = client.post(
            "/api/v1/experiments/run?seed=11",
            json={"experiment": "syndrome_table", "seed": 2, "parameters": {"F": 0.9}},
        )
        assert response.status_code == 200
        assert response.json()["seed"] == 11

    def test_run_missing_parameter(self, client):
        response = client.post("/api/v1/experiments/run", json={"experiment": "bf_purify"})
        assert response.status_code == 422

    def test_run_unknown_experiment(self, client):
        response = client.post("/api/v1/experiments/run", json={"experiment": "teleport"})
        assert response.status_code == 422

    def test_numerical_failure(self, client):
        with patch("app.api.experiments.experiment_service.run", side_effect=NumericalError("no coincidences")):
            response = client.post("/api/v1/experiments/run", json={"experiment": "bf_curve"})
        assert response.status_code == 422
        assert response.json()["detail"] == "no coincidences"

    def test_value_error(self, client):
        with patch("app.api.experiments.experiment_service.run", side_effect=ValueError("bad angle")):
            response = client.post("/api/v1/experiments/run", json={"experiment": "bf_curve"})
        assert response.status_code == 400

    def test_syndrome_table_endpoint(self, client):
        """Test GET /api/v1/experiments/syndrome-table endpoint."""
        response = client.get("/api/v1/experiments/syndrome-table", params={"F": 0.8})
        assert response.status_code == 200
        data = response.json()
        assert len(data["tables"]["syndrome_table"]) == 16
        assert data["results"]["fidelity_after"] == pytest.approx(0.838150, abs=1e-6)

    def test_syndrome_table_range(self, client):
        response = client.get("/api/v1/experiments/syndrome-table", params={"F": 1.5})
        assert response.status_code == 422

    def test_bf_curve_endpoint(self, client):
        """Test GET /api/v1/experiments/bf-curve endpoint."""
        response = client.get("/api/v1/experiments/bf-curve")
        assert response.status_code == 200
        data = response.json()
        assert len(data["tables"]["bf_curve"]) == 501
        assert data["results"]["peak_F"] == pytest.approx(0.7429, abs=1e-4)


class TestServiceEndpoints:
    """Test root and health endpoints."""

    @pytest.fixture
    def client(self):
        from main import app
        return TestClient(app)

    def test_root(self, client):
        response = client.get("/")
        assert response.status_code == 200
        assert response.json()["status"] == "running"

    def test_health(self, client):
        response = client.get("/health")
        assert response.json() == {"status": "healthy"}
