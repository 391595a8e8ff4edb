from unittest.mock import patch

import pytest
from fastapi.testclient import TestClient

from src.api import routes
from src.api.main import app
from src.errors import ScenarioError


@pytest.fixture
def client():
    """Create a test client for the FastAPI app."""
    return TestClient(app)


class TestAPIHealth:
    """Test health check endpoint."""

    def test_health_check_success(self, client):
        response = client.get("/api/v1/health")

        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "healthy"
        assert "timestamp" in data
        assert data["services"] == {"map": "healthy", "scenarios": "healthy"}

    def test_health_check_map_failure(self, client):
        with patch("src.api.routes.load_map", side_effect=FileNotFoundError("map missing")):
            response = client.get("/api/v1/health")

        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "unhealthy"
        assert data["services"]["map"].startswith("unhealthy")

    def test_health_check_without_scenarios(self, client):
        with patch.object(routes.app_config, "bundled_scenarios", return_value=[]):
            response = client.get("/api/v1/health")

        assert response.json()["status"] == "degraded"


class TestScenarioEndpoints:
    """Listing and running bundled scenarios."""

    def test_list_scenarios(self, client):
        response = client.get("/api/v1/scenarios")

        assert response.status_code == 200
        assert {"fully_cav", "mixed_traffic", "sensor_faults"} <= set(response.json()["scenarios"])

    def test_run_scenario(self, client):
        response = client.post("/api/v1/scenarios/fully_cav/run", json={"seed": 4, "duration": 2.0})

        assert response.status_code == 200
        data = response.json()
        assert data["scenario"] == "fully_cav"
        assert data["seed"] == 4
        assert data["ticks"] == 200
        assert data["management_ticks"] == 20
        assert data["collisions"] == []
        assert set(data["timing_ms"]) == {
            "Object Detection", "HV Identification", "Intersection Management", "Total",
        }
        assert "command_range" not in data

    def test_run_without_body_uses_scenario_settings(self, client):
        with patch.object(routes.api_config, "max_scenario_duration", 1.0):
            response = client.post("/api/v1/scenarios/sensor_faults/run")

        assert response.status_code == 200
        data = response.json()
        assert data["seed"] == 3
        assert data["duration"] == 1.0

    def test_duration_is_capped(self, client):
        with patch.object(routes.api_config, "max_scenario_duration", 0.5):
            response = client.post("/api/v1/scenarios/fully_cav/run", json={"duration": 10.0})

        assert response.json()["ticks"] == 50

    def test_unknown_scenario(self, client):
        response = client.post("/api/v1/scenarios/rush_hour/run")

        assert response.status_code == 404
        data = response.json()
        assert data["error"] == "Not Found"
        assert "rush_hour" in data["detail"]

    def test_invalid_duration(self, client):
        response = client.post("/api/v1/scenarios/fully_cav/run", json={"duration": -1.0})

        assert response.status_code == 422

    def test_scenario_error_is_bad_request(self, client):
        with patch("src.api.routes.load_scenario", side_effect=ScenarioError("vehicle 1: unknown map element")):
            response = client.post("/api/v1/scenarios/fully_cav/run")

        assert response.status_code == 400
        assert "unknown map element" in response.json()["detail"]


class TestAPIDocs:
    """Generated documentation."""

    def test_openapi_lists_routes(self, client):
        response = client.get("/openapi.json")

        assert response.status_code == 200
        paths = response.json()["paths"]
        assert "/api/v1/scenarios/{name}/run" in paths
        assert "/api/v1/health" in paths
