"""Per-criterion PASS/FAIL summary for tests marked ``@pytest.mark.criterion``."""

import pytest

_OUTCOMES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_OUTCOMES] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, text = mark.args
    entry = item.config.stash[_OUTCOMES].setdefault(n, [text, []])
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry[1].append("skipped" if rep.skipped else "passed" if rep.passed else "failed")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_OUTCOMES]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        text, outcomes = results[n]
        if "failed" in outcomes:
            verdict = "FAIL"
        elif outcomes and all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {text}")
