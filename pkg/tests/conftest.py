"""Pytest fixtures for polymoments tests."""

import json

import numpy as np
import pytest

from polymoments.config import MomentsConfig
from polymoments.geometry import Polytope


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep developer settings out of the tests."""
    for name in (
        "POLYMOM_LOGGING_MODE",
        "POLYMOM_CACHE_DIR",
        "POLYMOM_RELATIONS_DIR",
        "POLYMOM_SEED",
        "POLYMOM_FUZZ_TRIALS",
        "POLYMOM_MAX_WORKERS",
        "POLYMOM_MC_SAMPLES",
        "POLYMOM_COORDINATE_BOUND",
        "POLYMOM_DENOMINATOR_BOUND",
        "POLYMOM_ROOT_TOLERANCE",
        "POLYMOM_RANK_THRESHOLD",
        "POLYMOM_DECIMAL_PLACES",
    ):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def mock_config(monkeypatch, tmp_path):
    """Provide test configuration via environment variables."""
    monkeypatch.setenv("POLYMOM_LOGGING_MODE", "off")
    monkeypatch.setenv("POLYMOM_FUZZ_TRIALS", "5")
    monkeypatch.setenv("POLYMOM_MC_SAMPLES", "2000")
    return MomentsConfig(_env_file=None)


@pytest.fixture
def rng():
    """Seeded generator for random rational instances."""
    return np.random.default_rng(20240917)


@pytest.fixture
def unit_square():
    return Polytope.polygon([(0, 0), (1, 0), (1, 1), (0, 1)])


@pytest.fixture
def standard_triangle():
    return Polytope.simplex([(0, 0), (1, 0), (0, 1)])


@pytest.fixture
def standard_tetrahedron():
    return Polytope.simplex([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])


@pytest.fixture
def quadrilateral():
    """A convex quadrilateral with no parallel sides."""
    return Polytope.polygon([(0, 0), (2, 0), (3, 2), (0, 1)])


@pytest.fixture
def hexagon():
    return Polytope.polygon([(2, 0), (1, 2), (-1, 2), (-2, 0), (-1, -2), (1, -2)])


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document into the test directory and return its path."""

    def write(name, document):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write
