import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (description, passed)
_ACCEPTANCE: dict[int, tuple[str, bool]] = {}


@pytest.fixture
def criterion(request):
    """Register the enclosing test as acceptance criterion ``n``.

    Usage: ``criterion(3, "gradient oracle suite")`` at the start of the test.
    The outcome is taken from the test report, so a failing assertion marks
    the criterion FAIL.
    """
    def register(number: int, description: str):
        request.node.user_properties.append(("criterion", (number, description)))
    return register


def pytest_runtest_logreport(report):
    if report.skipped or (report.when != "call" and not report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            number, description = value
            ok = report.passed and _ACCEPTANCE.get(number, (description, True))[1]
            _ACCEPTANCE[number] = (description, ok)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        description, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {description}")
