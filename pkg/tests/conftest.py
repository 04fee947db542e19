from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from pbisim.core import parse_plts

DATA = Path(__file__).parent / "data"

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def e1():
    return parse_plts((DATA / "e1.plts").read_text())


@pytest.fixture
def e1_path() -> Path:
    return DATA / "e1.plts"
