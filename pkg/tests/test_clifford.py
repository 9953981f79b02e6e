import numpy as np
import pytest
from scipy import stats

from mipt_xeb.clifford import (
    N_ONE_QUBIT, N_TWO_QUBIT, CliffordGate, named_gate, one_qubit_table, sample_two_qubit_clifford,
    two_qubit_table,
)
from mipt_xeb.dense import gate_unitary, pauli_matrix
from mipt_xeb.pauli import PauliString


def _symplectic_count(nq):
    # |Sp(2n, F2)| * 4^n sign choices
    order = 2 ** (nq * nq)
    for j in range(1, nq + 1):
        order *= 4 ** j - 1
    return order * 4 ** nq


def test_group_sizes():
    assert len(two_qubit_table()) == N_TWO_QUBIT == _symplectic_count(2) == 11520
    assert len(one_qubit_table()) == N_ONE_QUBIT == _symplectic_count(1) == 24


def test_table_elements_distinct():
    tab = two_qubit_table()
    rows = {(tuple(tab.out[g, [1, 2, 4, 8]]), tuple(tab.sign[g, [1, 2, 4, 8]])) for g in range(len(tab))}
    assert len(rows) == N_TWO_QUBIT


def test_inverse_table():
    tab = two_qubit_table()
    rng = np.random.default_rng(3)
    for g in rng.integers(0, N_TWO_QUBIT, 200):
        gate = CliffordGate((0, 1), int(g))
        inv = gate.inverse()
        for lit in ("XI", "ZI", "IX", "IZ", "YY", "-XZ"):
            p = PauliString.from_literal(lit)
            assert inv.conjugate(gate.conjugate(p)) == p


def test_sampled_gates_symplectic(rng):
    for _ in range(500):
        assert sample_two_qubit_clifford(rng).is_symplectic()


def test_sampling_uniform_chi_square():
    rng = np.random.default_rng(11)
    draws = np.fromiter((sample_two_qubit_clifford(rng).index for _ in range(N_TWO_QUBIT * 100)),
                        dtype=np.int64, count=N_TWO_QUBIT * 100)
    counts = np.bincount(draws, minlength=N_TWO_QUBIT)
    chi2 = ((counts - 100) ** 2 / 100).sum()
    dof = N_TWO_QUBIT - 1
    assert abs(chi2 - dof) < 5 * np.sqrt(2 * dof)
    assert stats.chi2.sf(chi2, dof) > 1e-6


def test_named_gates_act_as_expected():
    h = named_gate("H", 0)
    assert h.conjugate(PauliString.from_literal("Z")) == PauliString.from_literal("X")
    s = named_gate("S", 0)
    assert s.conjugate(PauliString.from_literal("X")) == PauliString.from_literal("Y")
    cx = named_gate("CNOT", 0, 1)
    assert cx.conjugate(PauliString.from_literal("XI")) == PauliString.from_literal("XX")
    assert cx.conjugate(PauliString.from_literal("IZ")) == PauliString.from_literal("ZZ")


def test_literal_roundtrip(rng):
    for _ in range(200):
        g = sample_two_qubit_clifford(rng, (2, 0))
        lit = g.to_literal()
        assert len(lit) == 24
        assert CliffordGate.from_literal((2, 0), lit) == g
    one = CliffordGate((1,), 5)
    assert CliffordGate.from_literal((1,), one.to_literal()) == one
    with pytest.raises(ValueError):
        CliffordGate.from_literal((0, 1), "garbage")


def test_dense_unitary_matches_table(rng):
    for _ in range(60):
        g = sample_two_qubit_clifford(rng)
        u = gate_unitary(g)
        assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-10)
        for lit in ("XI", "ZI", "IX", "IZ"):
            p = PauliString.from_literal(lit)
            assert np.allclose(u @ pauli_matrix(p) @ u.conj().T, pauli_matrix(g.conjugate(p)), atol=1e-10)


def test_bad_support():
    with pytest.raises(ValueError):
        CliffordGate((0, 0), 1)
    with pytest.raises(ValueError):
        CliffordGate((0, 1), N_TWO_QUBIT)
