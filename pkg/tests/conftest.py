import numpy as np
import pytest

from mpsqc.simcore import StateVector


def random_state(rng, n_qubits, real=False):
    amps = rng.normal(size=2**n_qubits)
    if not real:
        amps = amps + 1j * rng.normal(size=2**n_qubits)
    return StateVector.from_amplitudes(amps, normalize=True)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line, print it, then assert on it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def check(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
