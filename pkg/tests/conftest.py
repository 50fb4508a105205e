import pytest

from orlisov import Domain, QuadratureScheme, WeakFormContext, YoungFunction

BUILTIN = {
    "power3": YoungFunction.power(3.0),
    "power_sum": YoungFunction.power_sum(2.0, 4.0),
    "bump": YoungFunction.bump_power(1.5),
}

_criteria: dict[int, tuple[str, list[str]]] = {}


@pytest.fixture(scope="session")
def interval32():
    return Domain.interval(0.0, 1.0, 32)


@pytest.fixture(scope="session")
def scheme1d():
    return QuadratureScheme(3, 6, 8)


@pytest.fixture(scope="session")
def ctx_p2(interval32, scheme1d):
    return WeakFormContext(YoungFunction.power(2.0), 0.5, interval32, scheme1d)


@pytest.fixture(scope="session", params=sorted(BUILTIN))
def builtin_ctx(request, interval32, scheme1d):
    return WeakFormContext(BUILTIN[request.param], 0.5, interval32, scheme1d)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    n, title = mark.args
    _criteria.setdefault(n, (title, []))[1].append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, outcomes = _criteria[n]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}")
