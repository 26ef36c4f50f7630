import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    log = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {label}: {detail}"
        log[number] = line
        print(line)
        return ok

    return record


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if log:
        terminalreporter.section("acceptance criteria")
        for key in sorted(log):
            terminalreporter.write_line(log[key])
