import numpy as np
import pytest

from opspace.opmatrix import BlockMatrix

ACCEPTANCE_LINES: list[str] = []


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_block(rng, n, q, m, mp=None) -> BlockMatrix:
    return BlockMatrix(random_complex(rng, (n, q, m, m if mp is None else mp)))


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, (n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
