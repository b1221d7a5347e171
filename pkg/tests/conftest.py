import json
from pathlib import Path

import pytest

from multisig.group import curve_group, toy_group, toy_group_for_order

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def toy():
    return toy_group()


@pytest.fixture(scope="session")
def toy16():
    # order 65521: largest prime below 2^16, big enough that 1/q accidents
    # cannot pollute multi-trial assertions
    return toy_group_for_order(65521)


@pytest.fixture(scope="session")
def curve():
    return curve_group()


@pytest.fixture(scope="session")
def golden():
    return json.loads((DATA / "golden_vectors.json").read_text())


_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def acceptance():
    """Collect one verdict line per acceptance check for the end-of-run
    summary (captured stdout from passing tests is otherwise invisible)."""
    return _acceptance_lines.append


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
