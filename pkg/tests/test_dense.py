import math

import numpy as np
import pytest

from mipt_xeb.circuits import Circuit, CircuitSpec, build_circuit, inject_noise, make_rng
from mipt_xeb.clifford import named_gate, sample_two_qubit_clifford
from mipt_xeb.dense import (
    T_AMPLITUDE, BudgetError, DenseState, density_from_generators, enumerate_records, exact_chi_dense,
    gate_unitary, pauli_matrix, tvd,
)
from mipt_xeb.pauli import PauliString
from mipt_xeb.states import InitialState
from mipt_xeb.xeb import exact_chi

from conftest import random_pauli, random_stabilizer_group

MEASURE_Z0 = Circuit.from_text("L=1 stage_boundary=0\nM 0 0\n")


def random_density(rng, n):
    a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_zero_measure_z():
    assert enumerate_records(MEASURE_Z0, DenseState.zero(1)) == {(0,): 1.0}


def test_t_measure_z():
    d = enumerate_records(MEASURE_Z0, DenseState.product([[1 / math.sqrt(2), T_AMPLITUDE]]))
    assert d[(0,)] == pytest.approx(0.5, abs=1e-12) and d[(1,)] == pytest.approx(0.5, abs=1e-12)


def test_state_invariants():
    DenseState.alternating_magic(6).check()
    DenseState.maximally_mixed(3).check()
    with pytest.raises(AssertionError):
        DenseState(1, vec=np.array([1.0, 1.0], complex)).check()
    with pytest.raises(AssertionError):
        DenseState(1, rho=np.diag([1.5, -0.5]).astype(complex)).check()
    with pytest.raises(BudgetError):
        DenseState.zero(15)
    with pytest.raises(ValueError):
        DenseState(1)


def test_budget():
    c = build_circuit(CircuitSpec(4, p=0.9, seed=1))
    assert c.n_measurements > 3
    with pytest.raises(BudgetError):
        enumerate_records(c, DenseState.zero(4), max_measurements=3)
    with pytest.raises(BudgetError):
        exact_chi_dense(c, c, DenseState.zero(4), DenseState.zero(4), max_measurements=3)


def test_projector_completeness(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        p = random_pauli(rng, n)
        if p.is_identity():
            continue
        # pure branches are one-sided projections, so they sum back to the input
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        pure = DenseState(n, vec=v / np.linalg.norm(v))
        branches = [pure.copy(), pure.copy()]
        probs = [b.project(p, bit) for bit, b in enumerate(branches)]
        assert np.abs(branches[0].vec + branches[1].vec - pure.vec).max() < 1e-10
        assert sum(probs) == pytest.approx(1, abs=1e-10)
        # mixed branches sum to the dephased state and match the pure probabilities
        s = DenseState(n, rho=random_density(rng, n))
        total = np.zeros_like(s.rho)
        for bit in (0, 1):
            b = s.copy()
            b.project(p, bit)
            total += b.rho
        assert np.abs(total - s.copy().dephase(p).rho).max() < 1e-10
        assert pure.to_mixed().project(p, 1) == pytest.approx(probs[1], abs=1e-12)


def test_pauli_action_matches_matrix(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        p = random_pauli(rng, n, hermitian=False)
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        s = DenseState(n, vec=v.copy()).apply_pauli(p)
        assert np.allclose(s.vec, pauli_matrix(p) @ v)


def test_erase_gives_identity_marginal(rng):
    s = DenseState.alternating_magic(3).erase(1)
    s.check()
    assert np.allclose(s.partial_trace([1]), np.eye(2) / 2)
    assert np.allclose(s.partial_trace([0, 2]), DenseState.alternating_magic(3).partial_trace([0, 2]))


def test_generators_give_projector(rng):
    for _ in range(20):
        n = int(rng.integers(1, 5))
        g = random_stabilizer_group(rng, n, int(rng.integers(0, n + 1)))
        rho = density_from_generators(g)
        assert np.trace(rho).real == pytest.approx(1)
        for p in g:
            assert np.allclose(pauli_matrix(p) @ rho, rho)


def test_dfs_and_batch_agree(rng):
    for seed in range(15):
        c = build_circuit(CircuitSpec(6, "a2a" if seed % 2 else "1d", 0.2, encoding_ratio=1, bulk_ratio=1,
                                      seed=seed))
        if c.n_measurements > 12:
            continue
        init = DenseState.alternating_magic(6)
        a = enumerate_records(c, init, method="dfs")
        b = enumerate_records(c, init, method="batch")
        assert tvd(a, b) < 1e-12
        assert sum(a.values()) == pytest.approx(1, abs=1e-10)
    with pytest.raises(ValueError):
        enumerate_records(c, DenseState.maximally_mixed(6), method="batch")
    with pytest.raises(ValueError):
        enumerate_records(c, init, method="bogus")


def test_gate_unitaries_unitary(rng):
    for _ in range(20):
        u = gate_unitary(sample_two_qubit_clifford(rng, (0, 1)))
        assert np.allclose(u @ u.conj().T, np.eye(4))
    h = gate_unitary(named_gate("H", 0))
    assert np.allclose(h, np.array([[1, 1], [1, -1]]) / math.sqrt(2) * (h[0, 0] * math.sqrt(2)))


def test_chi_dense_rho_equals_sigma():
    c = build_circuit(CircuitSpec(6, p=0.2, encoding_ratio=1, bulk_ratio=1, seed=2))
    s = DenseState.alternating_magic(6)
    assert exact_chi_dense(c, c, s, s) == pytest.approx(1, abs=1e-10)


def test_chi_dense_matches_engine(rng):
    states = [InitialState.zero(), InitialState.mixed(), InitialState.plus()]
    checked = 0
    for seed in range(30):
        L = int(rng.choice([2, 4, 6]))
        clean = build_circuit(CircuitSpec(L, "1d", float(rng.uniform(0.1, 0.4)), encoding_ratio=1,
                                          bulk_ratio=1, seed=seed))
        noisy = inject_noise(clean, 0.1, make_rng(seed))
        if clean.n_measurements > 10:
            continue
        rho = states[seed % 3]
        sigma = InitialState.custom(random_stabilizer_group(rng, L, int(rng.integers(0, L + 1))))
        dense = exact_chi_dense(noisy, clean, DenseState.from_initial(rho, L), DenseState.from_initial(sigma, L))
        assert abs(dense - float(exact_chi(noisy, clean, rho, sigma))) < 1e-10
        checked += 1
    assert checked > 10


def test_chi_dense_magic_in_range_and_reproducible():
    for p in (0.05, 0.15, 0.25):
        c = build_circuit(CircuitSpec(6, "1d", p, encoding_ratio=1, bulk_ratio=1, seed=7))
        if c.n_measurements > 14:
            continue
        rho, sigma = DenseState.alternating_magic(6), DenseState.zero(6)
        v = exact_chi_dense(c, c, rho, sigma)
        assert 0 <= v <= 1 + 1e-12
        assert v == exact_chi_dense(c, c, rho, sigma)
