import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mipt_xeb.circuits import GATE1, MEASURE, Circuit, CircuitSpec, build_circuit, inject_noise, make_rng
from mipt_xeb.clifford import named_gate
from mipt_xeb.compression import (
    CompressedCircuit, PbcProgram, circuit_depth, compress, compressed_distribution,
    compressed_support, decompose_to_gates, gate_counts, postprocess, resource_report, to_pbc,
    uncompressed_support,
)
from mipt_xeb.dense import T_AMPLITUDE, DenseState, enumerate_records, tvd
from mipt_xeb.pauli import PauliString, commutes
from mipt_xeb.stabilizer import MixedStabilizerState

from conftest import random_stabilizer_group

T_STATE = [1 / np.sqrt(2), T_AMPLITUDE]


def measurement_circuit(n, ops):
    m = len(ops)
    return Circuit(n, np.full(m, MEASURE, np.int8), np.arange(m), np.zeros(m, int),
                   -np.ones(m, int), -np.ones(m, int), 0, m)


def program(n, literals):
    return PbcProgram(n, tuple((PauliString.from_literal(s), j) for j, s in enumerate(literals)))


def bare(k, ops):
    """Compressed circuit that is just a list of Pauli measurements on k qubits."""
    m = len(ops)
    return CompressedCircuit(k, tuple(range(k)), tuple(ops), tuple(range(m)), (), np.eye(m, dtype=np.uint8),
                             np.zeros(m, np.uint8), (1,) * m, "c" * m)


def circuit(L, p, seed, conn="1d", ratio=None):
    kw = {} if ratio is None else dict(encoding_ratio=ratio, bulk_ratio=ratio)
    return build_circuit(CircuitSpec(L, conn, p, seed=seed, **kw))


# -- to_pbc --------------------------------------------------------------------

def test_hadamard_then_measure():
    c = Circuit.from_text("L=2 stage_boundary=1\nU 0 0 X:+ZZ:+X\nM 1 0\n")
    assert c.kind[0] == GATE1
    prog = to_pbc(c)
    assert prog.operators == [PauliString.from_literal("XI")]


def test_empty_program():
    assert len(to_pbc(circuit(6, 0.0, 1))) == 0


def test_noisy_rejected():
    c = circuit(6, 0.3, 1)
    noisy = inject_noise(c, 0.2, make_rng(1))
    assert noisy.is_noisy
    with pytest.raises(ValueError):
        to_pbc(noisy)


def test_pbc_program_matches_circuit():
    rng = np.random.default_rng(1)
    done = 0
    for seed in range(40):
        L = int(rng.choice([2, 4, 6]))
        c = circuit(L, float(rng.uniform(0.05, 0.4)), seed, "1d" if seed % 2 else "a2a", ratio=0.5)
        if c.n_measurements > 10:
            continue
        prog = to_pbc(c)
        assert [j for _, j in prog.measurements] == list(range(c.n_measurements))
        init = DenseState.alternating_magic(L)
        d1 = enumerate_records(c, init)
        d2 = enumerate_records(measurement_circuit(L, prog.operators), init, measurements=prog.operators)
        assert tvd(d1, d2) < 1e-10
        done += 1
    assert done > 15


# -- compress ------------------------------------------------------------------

def test_all_in_z_b():
    cc = compress(program(4, ["ZIII", "IIZI", "-ZIZI"]), A=(1, 3))
    assert cc.cases == "aaa" and not cc.quantum_measurements and not cc.coin_flips
    assert postprocess([], [], cc).bits == (0, 0, 1)


def test_single_x_on_b():
    cc = compress(program(4, ["XIII"]), A=(1, 3))
    assert cc.cases == "b" and cc.coin_flips == (0,) and not cc.quantum_measurements
    assert postprocess([], [1], cc).bits == (1,)
    assert postprocess([], [0], cc).bits == (0,)


def test_coin_then_repeat_is_deterministic():
    # a repeated X measurement returns the coin
    cc = compress(program(2, ["XI", "XI", "-XI"]), A=(1,))
    assert cc.cases == "baa"
    for coin in (0, 1):
        assert postprocess([], [coin], cc).bits == (coin, coin, 1 - coin)


def test_quantum_measurement_truncated():
    cc = compress(program(4, ["ZXIY", "-ZXIY"]), A=(1, 3))
    assert cc.cases == "ca"
    assert cc.quantum_measurements == (PauliString.from_literal("XY"),)
    assert postprocess([1], [], cc).bits == (1, 0)


def test_bad_subsystem():
    with pytest.raises(ValueError):
        compress(program(2, ["ZI"]), A=(5,))


def test_cases_independent_of_coins():
    for seed in range(20):
        prog = to_pbc(circuit(8, 0.2, seed))
        a = compress(prog, rng=make_rng(1))
        b = compress(prog, rng=make_rng(2))
        assert a == b and a.cases == b.cases


def test_each_source_once_and_bounds():
    for seed in range(30):
        L = 2 * (1 + seed % 4)
        c = circuit(L, 0.25, seed, "a2a" if seed % 2 else "1d")
        cc = compress(to_pbc(c))
        srcs = list(cc.deterministic) + list(cc.coin_flips) + list(cc.quantum_sources)
        assert sorted(srcs) == list(range(c.n_measurements))
        assert cc.k == L // 2
        assert len(cc.quantum_measurements) <= cc.k
        assert all(p.phase == 0 and p.n == cc.k for p in cc.quantum_measurements)
        assert set(cc.truncation_signs) <= {1, -1}


def test_text_round_trip():
    for seed in range(10):
        cc = compress(to_pbc(circuit(6, 0.3, seed)))
        assert CompressedCircuit.from_text(cc.to_text()) == cc
    empty = compress(to_pbc(circuit(4, 0.0, 1)))
    assert CompressedCircuit.from_text(empty.to_text()) == empty


def test_group_permanence():
    # a case (c) operator stays in the group: repeating it is deterministic, immediately
    # and at the end whenever no later operator disturbs it
    checked = 0
    for seed in range(60):
        prog = to_pbc(circuit(4 + 2 * (seed % 2), 0.1 + 0.005 * seed, seed, ratio=1))
        ops = prog.operators
        cc = compress(prog)
        for j in cc.quantum_sources:
            now = ops[:j + 1] + [ops[j]]
            assert compress(PbcProgram(prog.n, tuple((p, t) for t, p in enumerate(now)))).cases[-1] == "a"
            if all(commutes(ops[j], q) for q in ops[j + 1:]):
                end = ops + [ops[j]]
                assert compress(PbcProgram(prog.n, tuple((p, t) for t, p in enumerate(end)))).cases[-1] == "a"
                checked += 1
    assert checked > 5


# -- postprocess ----------------------------------------------------------------

def test_postprocess_identity():
    cc = bare(3, [PauliString.from_literal(s) for s in ("ZII", "IZI", "IIZ")])
    assert postprocess([1, 0, 1], [], cc).bits == (1, 0, 1)
    rec = postprocess([0, 1, 1], None, cc, circuit_id=4, shot_id=9)
    assert rec.bits == (0, 1, 1) and rec.circuit_id == 4 and rec.shot_id == 9


def test_postprocess_length_mismatch():
    cc = bare(2, [PauliString.from_literal("ZI")])
    with pytest.raises(ValueError):
        postprocess([0, 1], [], cc)
    with pytest.raises(ValueError):
        postprocess([0], [1], cc)


# -- end-to-end equivalence ---------------------------------------------------------

def test_stabilizer_inputs_exact():
    rng = np.random.default_rng(5)
    for trial in range(60):
        L = int(rng.choice([2, 4, 6, 8]))
        c = circuit(L, float(rng.uniform(0.02, 0.5)), trial, "1d" if trial % 2 else "a2a")
        cc = compress(to_pbc(c))
        g = random_stabilizer_group(rng, L // 2, L // 2)
        assert uncompressed_support(c, g, cc.A) == compressed_support(cc, g)


def test_magic_inputs_distribution():
    rng = np.random.default_rng(2)
    n = 0
    while n < 20:
        L = int(rng.choice([2, 4, 6]))
        c = circuit(L, float(rng.uniform(0.05, 0.4)), int(rng.integers(1 << 40)), "1d" if n % 2 else "a2a", ratio=1)
        if c.n_measurements > 10:
            continue
        n += 1
        d1 = enumerate_records(c, DenseState.alternating_magic(L))
        cc = compress(to_pbc(c))
        raw = enumerate_records(decompose_to_gates(cc), DenseState.product([T_STATE] * cc.k))
        assert tvd(d1, compressed_distribution(cc, raw)) < 1e-10


def test_sampled_round_trip():
    c = circuit(4, 0.3, 11, ratio=1)
    init = DenseState.alternating_magic(4)
    exact = enumerate_records(c, init)
    cc = compress(to_pbc(c))
    raw = enumerate_records(decompose_to_gates(cc), DenseState.product([T_STATE] * cc.k))
    keys = list(raw)
    probs = np.array([raw[k] for k in keys])
    rng = np.random.default_rng(0)
    shots = 20000
    counts = {}
    for i in rng.choice(len(keys), size=shots, p=probs / probs.sum()):
        rec = postprocess(keys[i], rng.integers(0, 2, len(cc.coin_flips)), cc).bits
        counts[rec] = counts.get(rec, 0) + 1
    assert tvd(exact, {k: v / shots for k, v in counts.items()}) < 0.03


# -- decomposition -----------------------------------------------------------------

def test_decompose_z():
    dec = decompose_to_gates(bare(2, [PauliString.from_literal("ZI")]))
    assert dec.n_gates == 0 and dec.n_measurements == 1 and dec.q0[0] == 0


def test_decompose_xx():
    ops = [PauliString.from_literal("XX")]
    dec = decompose_to_gates(bare(2, ops))
    counts = gate_counts(dec)
    assert counts == {"single_qubit": 2, "two_qubit": 1, "measurements": 1}
    for init in (DenseState.zero(2), DenseState.product([T_STATE, T_STATE]), DenseState.plus(2)):
        a = enumerate_records(dec, init)
        b = enumerate_records(measurement_circuit(2, ops), init, measurements=ops)
        assert tvd(a, b) < 1e-12


def random_program(rng, k):
    g = random_stabilizer_group(rng, k, int(rng.integers(1, k + 1)))
    ops = [p.unsigned() for p in g]
    rng.shuffle(ops)
    return ops


def test_decompose_random_programs():
    rng = np.random.default_rng(9)
    for _ in range(40):
        k = int(rng.integers(1, 7))
        ops = random_program(rng, k)
        dec = decompose_to_gates(bare(k, ops))
        init = DenseState.product([T_STATE if rng.random() < 0.5 else [1, 0] for _ in range(k)])
        a = enumerate_records(dec, init)
        b = enumerate_records(measurement_circuit(k, ops), init, measurements=ops)
        assert tvd(a, b) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_gate_bounds(k, seed):
    ops = random_program(np.random.default_rng(seed), k)
    counts = gate_counts(decompose_to_gates(bare(k, ops)))
    assert counts["single_qubit"] <= k * k
    assert counts["two_qubit"] <= 2 * k * k
    assert counts["measurements"] == len(ops)


# -- resources -----------------------------------------------------------------------

def test_resource_l44():
    spec = CircuitSpec(44, "1d", 0.15, seed=1)
    cc = compress(to_pbc(build_circuit(spec)))
    rep = resource_report(spec, cc)
    assert rep.hardware_qubits == (44, 22)
    assert rep.measurement_count[1] <= 22
    d = rep.to_dict()
    assert d["compressed_hardware_qubits"] == 22 and min(d.values()) >= 0


def test_resource_l20():
    counts = [circuit(20, 0.15, seed).n_measurements for seed in range(200)]
    assert abs(np.mean(counts) - 180) < 5
    for seed in range(15):
        c = circuit(20, 0.15, seed)
        rep = resource_report(c, compress(to_pbc(c)))
        assert rep.measurement_count[1] <= 10
        assert rep.depth[0] == 120 and rep.two_qubit_gates[0] == c.n_gates


def test_circuit_depth():
    c = circuit(6, 0.0, 1)
    assert circuit_depth(c, gates_only=True) == c.n_layers
