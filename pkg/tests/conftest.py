import numpy as np
import pytest

from zenompf.quantum import SIGMA_X, hamiltonian_generator, projector_channel
from zenompf.spectral import peripheral_split
from zenompf.zeno import ZenoStep


def rand_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def qubit():
    """Projective kick onto |0><0| against a sigma_x drive, t = 1."""
    p = projector_channel(np.diag([1.0, 0.0]).astype(np.complex128))
    gen = hamiltonian_generator(SIGMA_X)
    step = ZenoStep(p, gen, 1.0)
    return step, peripheral_split(p)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion; shown in the terminal summary."""
    def record(number, ok, detail, seconds=None):
        timing = "" if seconds is None else f" [{seconds:.2f} s]"
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}{timing}"
        print(line)
        _ACCEPTANCE_LINES.append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
