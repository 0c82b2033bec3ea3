import functools
import os

import pytest
from hypothesis import HealthCheck, settings

from kcohesion.generators import appendix_a_fixture, erdos_renyi

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@functools.lru_cache(maxsize=None)
def _fixture():
    return appendix_a_fixture()


@pytest.fixture(scope="session")
def fixture_graph():
    return _fixture()


def random_matrix():
    """The generator test matrix: small seeded graphs of several models."""
    from kcohesion.generators import (
        complete_graph,
        cycle_graph,
        grid_graph,
        path_graph,
        petersen_graph,
        powerlaw_configuration,
        star_graph,
    )

    out = [
        ("K5", complete_graph(5)),
        ("K7", complete_graph(7)),
        ("P6", path_graph(6)),
        ("C8", cycle_graph(8)),
        ("star5", star_graph(5)),
        ("grid3x4", grid_graph(3, 4)),
        ("petersen", petersen_graph()),
    ]
    for seed in range(8):
        out.append((f"er12-{seed}", erdos_renyi(12, 4.0, seed)))
        out.append((f"er30-{seed}", erdos_renyi(30, 5.0, seed)))
    for seed in range(4):
        out.append((f"pl40-{seed}", powerlaw_configuration(40, 2.0, seed)))
    return out


# -- acceptance reporting -------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
