import numpy as np
import pytest

from zaremba.geometry import (
    Disc,
    DiscExterior,
    HalfSpace,
    Interval,
    LinearPartition,
    MetricField,
    Rectangle,
    StripDamping,
)


@pytest.fixture
def disc():
    return Disc()


@pytest.fixture
def euclid2():
    return MetricField.euclidean(2)


@pytest.fixture
def zaremba_line():
    """Dirichlet at 0, Neumann at 1, damping a = 1 on [0.3, 0.7]."""
    return Interval(0.0, 1.0, LinearPartition([1.0], 0.5)), StripDamping(0, 0.3, 0.7, 1.0, 0.0)


def random_disc_seeds(n, rng, r_max=0.9):
    out = []
    for _ in range(n):
        r = r_max * np.sqrt(rng.uniform())
        t = rng.uniform(0, 2 * np.pi)
        a = rng.uniform(0, 2 * np.pi)
        out.append((np.array([r * np.cos(t), r * np.sin(t)]), np.array([np.cos(a), np.sin(a)])))
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
