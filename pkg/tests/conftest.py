from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("steppa", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("steppa")


@pytest.fixture(scope="session")
def stones():
    from steppa.geometry.presets import preset_scene

    return preset_scene("stepping-stones")


@pytest.fixture(scope="session")
def stairs():
    from steppa.geometry.presets import preset_scene

    return preset_scene("staircase")


@pytest.fixture(scope="session")
def slope():
    from steppa.geometry.presets import preset_scene

    return preset_scene("sloped")


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion: call with (number, ok, detail), then assert ok."""

    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
