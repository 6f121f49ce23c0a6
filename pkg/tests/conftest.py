import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("msseg", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("msseg")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def disc_image(n, r, centre=None, level=1.0):
    c = (n - 1) / 2 if centre is None else centre
    i, j = np.mgrid[:n, :n]
    return level * (((i - c) ** 2 + (j - c) ** 2) <= r * r).astype(np.float64)


@pytest.fixture(scope="session")
def size_discs():
    from msseg.phantoms import preset, render

    spec = preset("size-discs")
    return spec, render(spec)


@pytest.fixture(scope="session")
def size_discs_timed(size_discs):
    """Size-discs run (l2, alpha 200, 30 steps) on one thread, with its wall time."""
    from msseg._kernels import set_threads
    from msseg.bregman import run_bregman

    _, f = size_discs
    set_threads(1)
    t0 = time.perf_counter()
    seq = run_bregman(f, 200.0, 30, "l2")
    return seq, time.perf_counter() - t0


@pytest.fixture(scope="session")
def size_discs_run(size_discs_timed):
    return size_discs_timed[0]


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
