from collections import OrderedDict

import pytest

CRITERIA = OrderedDict((i, []) for i in range(1, 11))


def pytest_addoption(parser):
    parser.addoption("--run-long", action="store_true", default=False,
                     help="also run the exhaustive width-4 sweep (about a minute)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-long"):
        return
    skip = pytest.mark.skip(reason="needs --run-long")
    for item in items:
        if item.get_closest_marker("long"):
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        CRITERIA[mark.args[0]].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not any(CRITERIA.values()):
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, results in CRITERIA.items():
        if not results:
            continue
        ran = [r for r in results if r[1] != "skipped"]
        failed = [name for name, outcome in ran if outcome == "failed"]
        skipped = len(results) - len(ran)
        status = "FAIL" if failed else "PASS"
        extra = f" ({skipped} skipped)" if skipped else ""
        detail = f" failed: {', '.join(failed)}" if failed else ""
        tr.write_line(f"criterion {n:2d}: {status} [{len(ran)} checks{extra}]{detail}")
