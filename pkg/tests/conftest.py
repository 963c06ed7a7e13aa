import pytest

from stratmean.io import builtin_dataset

_criteria: dict[int, tuple[str, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, (title, []))
    if rep.failed:
        entry[1].append("FAIL")
    elif rep.when == "call":
        entry[1].append("PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, results = _criteria[number]
        status = "FAIL" if "FAIL" in results else "PASS"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")


@pytest.fixture(scope="session")
def kadilar():
    return builtin_dataset("kadilar-cingi-1999")


@pytest.fixture(scope="session")
def kadilar_tab():
    return builtin_dataset("kadilar-cingi-1999", f_convention="tabulated")
