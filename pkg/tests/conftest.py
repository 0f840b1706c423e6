from __future__ import annotations

import pytest

from elfarol.config import BrainSpec, SimConfig
from elfarol.world import GridConfig, Position, initial_world


@pytest.fixture
def default_config() -> SimConfig:
    return SimConfig()


@pytest.fixture
def small_config() -> SimConfig:
    """10x10 grid with a 4x4 bar at [3,6]^2 and 5 agents (threshold 3)."""
    return SimConfig(grid=GridConfig(10, 10, Position(3, 3), 4), n_agents=5, max_steps=20)


def place(config: SimConfig, positions):
    return initial_world(config, [Position(*p) for p in positions])


def with_brain(config: SimConfig, kind: str, **params) -> SimConfig:
    return config.with_overrides(brain=BrainSpec(kind, params))


_criteria: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    ok = _criteria.get(number, (title, True))[1] and rep.passed
    _criteria[number] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
