from pathlib import Path

import pytest
import structlog

from app.models import PhysicalConstants
from app.vortex.filament import base_ring

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def reset_logging():
    """The CLI reconfigures structlog; put the defaults back after each test."""
    yield
    structlog.reset_defaults()


@pytest.fixture
def unit_constants():
    return PhysicalConstants(rho0=1.0, v0=1.0, R0=1.0, L=1.0, mu0=1.0, hbar=1e-3)


@pytest.fixture
def cylinder():
    """Unit disk cross-section, L = 10 R0, beta = 1e-3, eps = 0.1."""
    return PhysicalConstants(L=10.0, hbar=1e-3, epsilon=0.1)


@pytest.fixture
def thin_ring():
    return base_ring((0.0, 0.0, 0.0), R=0.25, Gamma=1.0, epsilon=0.01)


@pytest.fixture
def config_dir():
    return CONFIG_DIR
