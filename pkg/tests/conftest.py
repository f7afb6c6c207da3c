import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vpx import mrs_table, preset, recurrence_table

settings.register_profile(
    "vpx", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("vpx")


@pytest.fixture(scope="session")
def hermite():
    return preset("hermite")


@pytest.fixture(scope="session")
def erdos():
    return preset("erdos")


@pytest.fixture(scope="session", params=["hermite", "erdos"])
def spec(request):
    return preset(request.param)


@pytest.fixture(scope="session")
def hermite_table(hermite):
    return recurrence_table(hermite, 128)


@pytest.fixture(scope="session")
def erdos_table(erdos):
    return recurrence_table(erdos, 128)


@pytest.fixture(scope="session")
def table(spec):
    return recurrence_table(spec, 128)


@pytest.fixture(scope="session")
def mrs(spec):
    return mrs_table(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one PASS/FAIL line per acceptance criterion, printed after the run
_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        terminalreporter.write_line(lines[num])


@pytest.fixture
def criterion(request):
    """``with criterion(3, "title") as note: ...``; ``note(text)`` adds detail."""
    import contextlib
    import time

    store = request.config.stash[_CRITERIA]

    @contextlib.contextmanager
    def run(num, title):
        detail = []
        t0 = time.perf_counter()
        try:
            yield detail.append
        except BaseException as exc:
            msg = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
            store[num] = f"criterion {num:2d}  FAIL  {title}  ({msg[:160]})"
            raise
        dt = time.perf_counter() - t0
        extra = "; ".join(detail)
        store[num] = f"criterion {num:2d}  PASS  {title}  [{dt:.1f}s{'; ' + extra if extra else ''}]"

    return run
