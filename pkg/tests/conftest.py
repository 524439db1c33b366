import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from torsynth.dataset import FlowDataset

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_ds(features, labels, names=None, **kw):
    features = np.asarray(features, dtype=np.float64)
    names = names or [f"f{j}" for j in range(features.shape[1])]
    return FlowDataset(features, np.asarray(labels), names, **kw)


@pytest.fixture
def blobs():
    """Two well-separated 4-D Gaussian blobs, 60 rows per class, in [0, 1]."""
    rng = np.random.default_rng(7)
    x0 = rng.normal(0.3, 0.05, size=(60, 4))
    x1 = rng.normal(0.7, 0.05, size=(60, 4))
    return make_ds(np.clip(np.vstack([x0, x1]), 0, 1), np.repeat([0, 1], 60))


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} [{detail}]"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
