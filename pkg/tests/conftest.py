import os
import sys
from pathlib import Path

import numpy as np
import pytest

from ineqcomp.harness import Toolchain
from ineqcomp.problem import load_bundled_seeds, read_corpus

FIXTURES = Path(__file__).with_name("fixtures")
FAKE_LEAN = FIXTURES / "fake_lean.py"

_criteria: dict[str, str] = {}


@pytest.fixture(scope="session")
def seeds():
    return load_bundled_seeds()


@pytest.fixture(scope="session")
def seed_map(seeds):
    return {p.id: p for p in seeds}


@pytest.fixture(scope="session")
def mutations():
    return read_corpus(FIXTURES / "mutations.jsonl")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fake_toolchain(tmp_path):
    return Toolchain.resolve(tmp_path, [sys.executable, str(FAKE_LEAN), "{file}"])


def real_toolchain():
    if not os.environ.get("INEQCOMP_LEAN_PROJECT"):
        return None
    return Toolchain.resolve()


# one PASS/FAIL/SKIP line per acceptance criterion at the end of the run

def pytest_runtest_logreport(report):
    marker = report.keywords.get("acceptance")
    if marker is None:
        return
    name = getattr(report, "_criterion", None)
    if name is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _criteria.get(name)
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if prev != "FAIL" and not (prev == "PASS" and status == "SKIP"):
            _criteria[name] = status


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep._criterion = m.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _criteria.items():
        terminalreporter.write_line(f"{status}  {name}")
