import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed and not detail and call.excinfo is not None:
        detail = f"{call.excinfo.typename}: {call.excinfo.value}".splitlines()[0]
    _CRITERIA.setdefault(mark.args[0], []).append((item.name, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        rows = _CRITERIA[n]
        ok = all(passed for _, passed, _ in rows)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
        for name, passed, detail in rows:
            tr.write_line(f"    {'ok  ' if passed else 'FAIL'} {name}: {detail}")
