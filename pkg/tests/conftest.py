import os

import pytest
from hypothesis import HealthCheck, settings

from polydeflate.systems import load

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def bundled():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load(name)
        return cache[name]

    return get


# acceptance summary: one line per criterion, printed after the run
_CRITERIA = {}
_RANK = {"PASS": 0, "SKIP": 1, "FAIL": 2}


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    for key, value in report.user_properties:
        if key == "criterion":
            crit = value
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _CRITERIA.get(crit)
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        # the worst outcome sticks
        if prev is None or _RANK[status] > _RANK[prev[0]]:
            _CRITERIA[crit] = (status, report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA):
        status, nodeid = _CRITERIA[crit]
        terminalreporter.write_line(f"{status}  {crit}    [{nodeid.split('::')[-1]}]")
