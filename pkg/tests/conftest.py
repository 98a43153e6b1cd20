import numpy as np
import pytest

from armtrack.config import default_config


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criteria verdict lines after the test summary."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

A_K_TRUE = np.array([2.0, 3.3856, 0.8])
A_D_TRUE = np.array([9.26, 3.66, 3.2, 3.2])


@pytest.fixture
def ref_config():
    """Fresh copy of the reference experiment; mutate freely."""
    return default_config()


def random_admissible_a_d(rng):
    """Uniformly positive definite dynamic parameter vector: theta1 large
    enough relative to theta2 and theta3 that M(q) > 0 for all q."""
    t2 = rng.uniform(0.5, 5.0)
    t3 = rng.uniform(0.1, 2.0)
    t1 = t2 + 2.0 * t3 + rng.uniform(0.5, 5.0)
    t4 = rng.uniform(0.5, 5.0)
    return np.array([t1, t2, t3, t4])
