import pytest
from hypothesis import HealthCheck, settings

from boxct import get_backend, set_backend

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    prev = set_backend(request.param)
    yield request.param
    set_backend(prev)


@pytest.fixture
def numpy_backend():
    prev = set_backend("numpy")
    yield
    set_backend(prev)


@pytest.fixture(autouse=True)
def _restore_backend():
    prev = get_backend()
    yield
    set_backend(prev)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
