import time

import pytest

from critfpp.radial_sde import ThetaParams, sample_Z_sde
from critfpp.rng import stream_for

SEED = 20240917
SDE_SAMPLES = 10**5

_CRITERIA: dict[int, str] = {}
_TIMINGS: dict[str, float] = {}


@pytest.fixture(scope="session")
def sde_z():
    """10^5 samples of Z from the angle SDE at kappa = 6, dt = 1e-4."""
    t0 = time.perf_counter()
    params = ThetaParams(6.0, 1e-4, stream_for(SEED, "sde_z", 0))
    z = sample_Z_sde(params, SDE_SAMPLES)
    _TIMINGS["sde_z"] = time.perf_counter() - t0
    return z


@pytest.fixture(scope="session")
def timings():
    return _TIMINGS


@pytest.fixture
def criterion():
    """Record and print the one-line verdict of an acceptance criterion."""

    def report(num: int, ok: bool, detail: str, seconds: float) -> bool:
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'} {detail} [{seconds:.0f}s]"
        _CRITERIA[num] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
