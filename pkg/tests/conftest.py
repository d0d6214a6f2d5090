import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.fixture
def detail(request):
    """Append a short measurement note to the criterion summary line."""
    notes = []
    request.node.user_properties.append(("notes", notes))
    return notes.append


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    notes = dict(report.user_properties).get("notes", [])
    _CRITERIA[marker] = (report.outcome, "; ".join(notes))


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", (m.args[0], m.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), (outcome, notes) in sorted(_CRITERIA.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {num:2d} {status}: {title}"
        if notes:
            line += f" [{notes}]"
        terminalreporter.write_line(line)
