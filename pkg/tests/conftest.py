"""Shared fixtures for the skewmech test suite."""

import numpy as np
import pytest

from skewmech.models import ModelLoader


@pytest.fixture(scope="session")
def loader():
    """Loader on the default search path."""
    return ModelLoader(search_paths=[])


@pytest.fixture(scope="module")
def snakeboard(loader):
    """Reduced snakeboard with the quoted J1 = 1/4 override (kappa = 1 at phi = 0)."""
    return loader.load("snakeboard_reduced", {"J1": 0.25})


@pytest.fixture(scope="module")
def beanie(loader):
    """Reduced beanie-on-a-table model."""
    return loader.load("beanie_reduced")


@pytest.fixture(scope="module")
def carriage(loader):
    """Two-wheeled carriage model."""
    return loader.load("carriage")


@pytest.fixture
def rng():
    """Deterministic random generator."""
    return np.random.default_rng(0)
