import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = dict(item.user_properties).get("detail", "")
        _RESULTS[marker.args[0]] = (marker.args[1], report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_RESULTS):
        title, passed, detail = _RESULTS[cid]
        line = f"[{'PASS' if passed else 'FAIL'}] {cid} {title}"
        terminalreporter.write_line(f"{line} :: {detail}" if detail else line)


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the criterion summary."""

    def record(text):
        request.node.user_properties.append(("detail", text))

    return record
