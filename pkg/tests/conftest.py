import json

import pytest

from helpers import FIXTURES, make_essay


@pytest.fixture
def essay_factory():
    return make_essay


@pytest.fixture(scope="session")
def metric_fixture():
    return json.loads((FIXTURES / "metric_pairs.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def ratio_docs():
    with open(FIXTURES / "ratio_docs.jsonl", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


_criteria: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed:
        _criteria[n] = (title, "FAIL", detail or rep.longreprtext.strip().splitlines()[-1][:160])
    elif rep.when == "call":
        _criteria[n] = (title, "PASS" if rep.passed else rep.outcome.upper(), detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status, detail = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {status:4s} {title}" + (f" ({detail})" if detail else ""))
