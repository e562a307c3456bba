import copy
from pathlib import Path

import pytest

from clariq.config import load_config
from clariq.engine import ClarificationEngine

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def demo_config():
    return load_config(FIXTURES / "demo_config.toml")


@pytest.fixture
def demo_engine(demo_config):
    return ClarificationEngine(demo_config)
