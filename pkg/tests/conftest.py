from pathlib import Path

import pytest

from fredanon import synthetic
from fredanon.data import load_dataset, load_schema
from fredanon.fuzzy import parse_fis

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "fredanon" / "fixtures"

_acceptance: list[tuple[str, str]] = []


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def demo():
    schema = load_schema(FIXTURES / "demo_schema.json")
    p = load_dataset(FIXTURES / "demo_private.csv", schema.primary())
    q = load_dataset(FIXTURES / "demo_aux.csv", schema.auxiliary())
    fis = parse_fis(FIXTURES / "demo_fis.json", schema)
    return schema, p, q, fis


@pytest.fixture(scope="session")
def bench():
    p, q = synthetic.datasets()
    return synthetic.schema(), p, q, synthetic.fis()


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    doc = getattr(report, "criterion", None) or report.nodeid.split("::")[-1]
    _acceptance.append((doc, "PASS" if report.passed else "FAIL"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker:
        rep.criterion = marker.args[0]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _acceptance:
        terminalreporter.write_line(f"{status}  {name}")
