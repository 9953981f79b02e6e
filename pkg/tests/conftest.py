import numpy as np
import pytest

from mipt_xeb.clifford import sample_two_qubit_clifford, CliffordGate, N_ONE_QUBIT
from mipt_xeb.pauli import GeneratorSet, PauliString
from mipt_xeb.stabilizer import MixedStabilizerState
from mipt_xeb.states import random_stabilizer_group  # noqa: F401


def random_pauli(rng, n, hermitian=True):
    x = int(rng.integers(0, 1 << n)) if n else 0
    z = int(rng.integers(0, 1 << n)) if n else 0
    phase = int(rng.choice([0, 2])) if hermitian else int(rng.integers(4))
    return PauliString(n, x, z, phase)


def scramble(state, rng, depth):
    n = state.n
    for _ in range(depth):
        if n >= 2 and rng.random() < 0.7:
            a, b = rng.choice(n, 2, replace=False)
            state.apply_gate(sample_two_qubit_clifford(rng, (int(a), int(b))))
        else:
            state.apply_gate(CliffordGate((int(rng.integers(n)),), int(rng.integers(N_ONE_QUBIT))))
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
