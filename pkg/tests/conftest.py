import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sdtlab import ncds
from sdtlab.harness.config import builtin_path

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def sine_model():
    return ncds.load_model(builtin_path("sine_ncds"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance results, filled by tests/test_acceptance.py and printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    def record(n: int, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE[n] = (bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
