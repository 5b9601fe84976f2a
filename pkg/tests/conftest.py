import numpy as np
import pytest

from atp.corpus import synthetic_image
from atp.masking import AtpKey


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def key():
    return AtpKey.from_seed(7)


@pytest.fixture(scope="session")
def image64():
    return synthetic_image(3, size=64)


@pytest.fixture(scope="session")
def msg32():
    return np.random.default_rng(99).integers(0, 2, 32).astype(np.uint8)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
