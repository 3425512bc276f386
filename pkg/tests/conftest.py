"""
Pytest configuration and fixtures for the elastic wave laboratory tests.
"""

import sys
from pathlib import Path

import pytest

# Add project root to path so `from src.*` imports resolve
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.symbol_core import validate_params  # noqa: E402


@pytest.fixture
def equal_params():
    """Parameters on the balanced line rho + theta = 1."""
    return validate_params(1.0, 2.0, 0.25, 0.75)


@pytest.fixture
def below_params():
    return validate_params(1.0, 2.0, 0.2, 0.7)


@pytest.fixture
def above_params():
    return validate_params(1.0, 2.0, 0.3, 0.9)


@pytest.fixture
def clean_lab_env(monkeypatch):
    """Keep developer environment variables out of config resolution."""
    for name in ("ELASTIC_LAB_OUTPUT_DIR", "ELASTIC_LAB_LOG_LEVEL", "ELASTIC_LAB_THREADS"):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch
