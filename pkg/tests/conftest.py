import logging
import os

import pytest

from src.config import AppConfig
from src.perception.models import Detection
from src.road_map.loader import load_map, parse_map
from src.road_map.routing import path_from_segments
from src.simulation.scenario import parse_scenario
from src.v2x.messages import make_cav_message
from src.vehicle_dynamics.models import VehicleState

# Set test environment variables
os.environ.setdefault("SIM_LOG_LEVEL", "WARNING")
os.environ["API_DEBUG"] = "true"
os.environ["ENVIRONMENT"] = "testing"

logging.getLogger("src").setLevel(logging.WARNING)


@pytest.fixture(scope="session")
def app_config():
    return AppConfig()


@pytest.fixture(scope="session")
def civat_graph(app_config):
    """The bundled four-way testbed map."""
    return load_map(app_config.map_path("civat_map"))


@pytest.fixture(scope="session")
def toy_map_doc():
    """A five-node map: a straight run 1-2-3, a branch 2-4 and a long detour 1-5-3."""
    return {
        "version": 1,
        "name": "toy",
        "nodes": [
            {"id": 1, "x": 0.0, "y": 0.0},
            {"id": 2, "x": 1.0, "y": 0.0},
            {"id": 3, "x": 2.0, "y": 0.0},
            {"id": 4, "x": 1.0, "y": 1.0},
            {"id": 5, "x": 1.0, "y": -2.0},
        ],
        "segments": [
            {"id": 10, "from": 1, "to": 2, "kind": "approach", "waypoints": [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]},
            {"id": 11, "from": 2, "to": 3, "kind": "connector", "waypoints": [[1.0, 0.0], [2.0, 0.0]]},
            {"id": 12, "from": 2, "to": 4, "kind": "connector", "waypoints": [[1.0, 0.0], [1.0, 1.0]]},
            {"id": 13, "from": 1, "to": 5, "kind": "beltway", "waypoints": [[0.0, 0.0], [1.0, -2.0]]},
            {"id": 14, "from": 5, "to": 3, "kind": "beltway", "waypoints": [[1.0, -2.0], [2.0, 0.0]]},
        ],
        "regions": [
            {"name": "intersection", "polygon": [[0.5, -0.5], [1.5, -0.5], [1.5, 0.5], [0.5, 0.5]]},
        ],
    }


@pytest.fixture(scope="session")
def toy_graph(toy_map_doc):
    return parse_map(toy_map_doc)


@pytest.fixture
def cav_message(civat_graph):
    """Factory for a CAV message placed on a route of the bundled map."""

    def make(sender_id, segments, x, y, psi, v=0.5, t=0.0):
        path = path_from_segments(civat_graph, segments)
        return make_cav_message(VehicleState(x=x, y=y, psi=psi, v=v), path, sender_id, t)

    return make


@pytest.fixture
def detection():
    """Factory for a testbed-sized detection."""

    def make(x, y, psi=0.0, t=0.0, score=1.0):
        return Detection(x, y, psi, 0.30, 0.15, t, score)

    return make


def scenario_doc(vehicles, duration=10.0, seed=0, **sections):
    """Minimal scenario document on the bundled map."""
    doc = {"version": 1, "name": "test", "map": "civat_map", "duration": duration, "seed": seed, "vehicles": vehicles}
    doc.update(sections)
    return doc


@pytest.fixture
def make_scenario():
    def make(vehicles, duration=10.0, seed=0, **sections):
        return parse_scenario(scenario_doc(vehicles, duration, seed, **sections))

    return make


@pytest.fixture(scope="session")
def straight_routes():
    """(start, goal) node pairs crossing straight through the bundled map."""
    return {"south": (11, 14), "north": (13, 12), "west": (15, 18), "east": (17, 16)}
