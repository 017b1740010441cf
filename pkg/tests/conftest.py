from __future__ import annotations

from pathlib import Path

import pytest

import bcplus
from bcplus.normalize import ground
from bcplus.parser import load_program

PKG = Path(bcplus.__file__).parent
FIXTURES = PKG / "fixtures"
MOCK_MCP = PKG / "mock" / "mcp"


def fixture_text(rel: str) -> str:
    return (FIXTURES / rel).read_text(encoding="utf-8")


def load(rel: str):
    return load_program(fixture_text(rel), rel)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs for minutes (the 7-disk Hanoi fixture)")


@pytest.fixture(scope="session")
def mcp_program():
    return load("mcp/mcp.bc")


@pytest.fixture(scope="session")
def mcp_ground(mcp_program):
    return ground(mcp_program)


# one line per acceptance criterion at the end of the run
_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if not report.nodeid.startswith("tests/test_acceptance.py") or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA[name] = {"passed": "PASS", "failed": "FAIL", "skipped": "DECLARED"}[report.outcome]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        num, _, label = name[len("test_criterion_"):].partition("_")
        terminalreporter.write_line(f"criterion {int(num):2d}  {_CRITERIA[name]:8}  {label.replace('_', ' ')}")
