import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from propmap import pipeline  # noqa: E402
from propmap.config import RunConfig  # noqa: E402
from propmap.simharness import flat_scenario, generate, ramp_scenario  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def flat_run():
    """Clean 4 m flat trot at 100 Hz, generated once."""
    return generate(flat_scenario(length=4.0, sample_rate_hz=100.0))


@pytest.fixture(scope="session")
def flat_map(flat_run):
    return pipeline.build_map(flat_run.header, flat_run.samples, RunConfig())


@pytest.fixture(scope="session")
def ramp_run():
    """Clean 10 deg ramp traversal at 100 Hz."""
    return generate(ramp_scenario(10.0, sample_rate_hz=100.0))
