"""Clifford circuit compression onto the magic register.

Pipeline: ``to_pbc`` pushes every unitary past the measurements so each
measurement becomes a multi-qubit Pauli on the input state; ``compress``
resolves those Paulis against the known ``|0>`` half of the input, leaving at
most ``|A|`` commuting Pauli measurements on the magic half ``A``;
``postprocess`` maps raw quantum bits and coin flips back to the source record;
``decompose_to_gates`` lowers the Pauli measurements to CNOT ladders plus
single-qubit Cliffords.

Signs are tracked symbolically.  Every operator carries a constant sign (in the
PauliString phase) and an F2-linear form over the "variables" of earlier
measurements, stored as an int whose bit ``j`` is source measurement ``j``.
A variable is either a coin (case b) or a raw quantum bit (case c).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circuits import CHAIN_1D, GATE1, GATE2, MEASURE, Circuit, CircuitSpec, build_circuit
from .clifford import CliffordGate, _table, named_gate, one_qubit_table
from .engine import AffineSpace, record_map
from .pauli import GeneratorSet, PauliString, pauli_mul, product_phase
from .states import InitialState
from .xeb import MeasurementRecord

__all__ = [
    "PbcProgram",
    "CompressedCircuit",
    "ResourceReport",
    "CompressionError",
    "to_pbc",
    "compress",
    "postprocess",
    "decompose_to_gates",
    "resource_report",
    "gate_counts",
    "circuit_depth",
    "embed_input",
    "uncompressed_support",
    "compressed_support",
    "compressed_distribution",
]

CASE_DETERMINISTIC = "a"
CASE_COIN = "b"
CASE_QUANTUM = "c"


class CompressionError(ValueError):
    """Precondition of the compression algorithm violated."""


# -- Pauli-based program --------------------------------------------------------

@dataclass(frozen=True)
class PbcProgram:
    """Measured Paulis conjugated back to the input state, in source order.

    ``measurements[j] = (P, j)``.  ``P`` keeps the sign produced by the
    conjugation; a ``-`` sign simply flips that outcome.
    """

    n: int
    measurements: tuple

    def __len__(self) -> int:
        return len(self.measurements)

    @property
    def operators(self) -> list[PauliString]:
        return [p for p, _ in self.measurements]


def to_pbc(c: Circuit) -> PbcProgram:
    """Heisenberg-conjugate each measured ``Z_q`` back through the preceding gates."""
    if c.is_noisy:
        raise ValueError("to_pbc needs a clean circuit (no erasure events)")
    n = c.L
    # images[2q] = V^dag X_q V, images[2q+1] = V^dag Z_q V for the gates V so far
    images = []
    for q in range(n):
        images.append(PauliString.single(n, q, "X"))
        images.append(PauliString.single(n, q, "Z"))
    out = []
    j = 0
    for k, a, b, g in zip(c.kind.tolist(), c.q0.tolist(), c.q1.tolist(), c.gate.tolist()):
        if k == MEASURE:
            out.append((images[2 * a + 1], j))
            j += 1
            continue
        support = (a, b) if k == GATE2 else (a,)
        nq = len(support)
        tab = _table(nq)
        inv = int(tab.inverse[g])
        # (V' )^dag P V' = V^dag (U^dag P U) V with U^dag P U read off the inverse table
        new = []
        for slot in range(2 * nq):
            pat = int(tab.out[inv, 1 << slot])
            acc = PauliString(n, 0, 0, 2 * int(tab.sign[inv, 1 << slot]))
            for bit in range(2 * nq):
                if (pat >> bit) & 1:
                    acc = pauli_mul(acc, images[2 * support[bit // 2] + (bit & 1)])
            new.append(acc)
        # local pattern bits are ordered x0 z0 x1 z1, which is also the Y-free
        # product order X then Z; fix Y = i X Z
        for slot in range(2 * nq):
            pat = int(tab.out[inv, 1 << slot])
            extra = 0
            for kq in range(nq):
                if (pat >> (2 * kq)) & 3 == 3:
                    extra += 1  # X*Z = -iY, so Y = i * X * Z
            new[slot] = PauliString(n, new[slot].x, new[slot].z, new[slot].phase + extra)
        for slot in range(2 * nq):
            images[2 * support[slot // 2] + (slot & 1)] = new[slot]
    return PbcProgram(n, tuple(out))


# -- symbolic stabilizer group ----------------------------------------------------

class _SignedGroup:
    """Commuting group with signs affine in the measurement variables."""

    def __init__(self, n: int):
        self.n = n
        self.order: list[tuple[PauliString, int]] = []
        self.rows: dict[int, tuple[PauliString, int]] = {}

    def first_anticommuting(self, p: PauliString) -> Optional[int]:
        for i, (g, _) in enumerate(self.order):
            if ((g.x & p.z) ^ (g.z & p.x)).bit_count() & 1:
                return i
        return None

    def reduce(self, p: PauliString, lin: int = 0) -> tuple[PauliString, int]:
        n = self.n
        x, z, phase = p.x, p.z, p.phase
        while True:
            key = x | (z << n)
            if not key:
                break
            hit = self.rows.get(key.bit_length() - 1)
            if hit is None:
                break
            row, rl = hit
            phase += row.phase + product_phase(x, z, row.x, row.z)
            x ^= row.x
            z ^= row.z
            lin ^= rl
        return PauliString(n, x, z, phase), lin

    def add(self, p: PauliString, lin: int) -> None:
        self.order.append((p, lin))
        r, rl = self.reduce(p, lin)
        if r.is_identity():
            raise CompressionError("generator already in the group")
        self.rows[(r.x | (r.z << self.n)).bit_length() - 1] = (r, rl)


def _conjugate_by_v(r: PauliString, rl: int, q: PauliString, ql: int,
                    p: PauliString, pl: int, coin_var: int) -> tuple[PauliString, int]:
    """Conjugate the signed operator ``r`` by ``V = (Q + z P)/sqrt 2`` with {P,Q}=0."""
    anti_q = bool(((q.x & r.z) ^ (q.z & r.x)).bit_count() & 1)
    anti_p = bool(((p.x & r.z) ^ (p.z & r.x)).bit_count() & 1)
    if not anti_q and not anti_p:
        return r, rl
    if anti_q and anti_p:
        return r.negate(), rl
    if anti_q:
        prod = pauli_mul(pauli_mul(q, p), r)
    else:
        prod = pauli_mul(pauli_mul(p, q), r)
    if not prod.is_hermitian:
        raise AssertionError("conjugated operator lost hermiticity")
    return prod, rl ^ ql ^ pl ^ coin_var


# -- compressed circuit ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CompressedCircuit:
    """Result of compression.

    Record bit ``j`` equals ``sign_matrix[j] . (raw, coins) + offset[j]`` (mod 2)
    where ``raw`` are the outcomes of ``quantum_measurements`` (all measured with
    a ``+`` sign) and ``coins`` the coin flips in ``coin_flips`` order.
    ``truncation_signs[i]`` is the sign relating the emitted operator to the
    restriction of the source operator when all earlier variables are zero.
    """

    n: int
    A: tuple
    quantum_measurements: tuple
    quantum_sources: tuple
    coin_flips: tuple
    sign_matrix: np.ndarray
    offset: np.ndarray
    truncation_signs: tuple
    cases: str
    coin_values: tuple = field(default=(), compare=False)

    def __post_init__(self):
        n_in = len(self.quantum_measurements) + len(self.coin_flips)
        m = np.ascontiguousarray(self.sign_matrix, dtype=np.uint8).reshape(len(self.cases), n_in)
        o = np.ascontiguousarray(self.offset, dtype=np.uint8).reshape(len(self.cases))
        m.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "sign_matrix", m)
        object.__setattr__(self, "offset", o)

    @property
    def k(self) -> int:
        return len(self.A)

    @property
    def n_source(self) -> int:
        return len(self.cases)

    @property
    def deterministic(self) -> tuple:
        return tuple(j for j, c in enumerate(self.cases) if c == CASE_DETERMINISTIC)

    @property
    def n_inputs(self) -> int:
        return len(self.quantum_measurements) + len(self.coin_flips)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompressedCircuit):
            return NotImplemented
        return (self.n, self.A, self.quantum_measurements, self.quantum_sources, self.coin_flips,
                self.truncation_signs, self.cases) == (
            other.n, other.A, other.quantum_measurements, other.quantum_sources,
            other.coin_flips, other.truncation_signs, other.cases,
        ) and np.array_equal(self.sign_matrix, other.sign_matrix) and np.array_equal(self.offset, other.offset)

    # -- text format -------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"n={self.n} k={self.k} A={','.join(map(str, self.A))} cases={self.cases or '-'}"]
        lines.append("[MEAS]")
        for src, p in zip(self.quantum_sources, self.quantum_measurements):
            lines.append(f"{src} {p.to_literal()}")
        lines.append("[COINS]")
        lines.append(" ".join(map(str, self.coin_flips)))
        lines.append("[SIGNMAP]")
        for row, off in zip(self.sign_matrix, self.offset):
            lines.append(("".join(map(str, row)) or "-") + f" {int(off)}")
        lines.append("[ETA]")
        lines.append(" ".join("+1" if s > 0 else "-1" for s in self.truncation_signs))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CompressedCircuit":
        lines = text.splitlines()
        if not lines:
            raise ValueError("empty compressed-circuit text")
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        n, A = int(head["n"]), tuple(int(a) for a in head["A"].split(",") if a)
        cases = "" if head["cases"] == "-" else head["cases"]
        sections: dict[str, list[str]] = {}
        cur = None
        for ln in lines[1:]:
            if ln.startswith("[") and ln.endswith("]"):
                cur = ln[1:-1]
                sections[cur] = []
            elif cur is not None:
                sections[cur].append(ln)
        for name in ("MEAS", "COINS", "SIGNMAP", "ETA"):
            if name not in sections:
                raise ValueError(f"missing section [{name}]")
        srcs, meas = [], []
        for ln in sections["MEAS"]:
            if ln.strip():
                a, b = ln.split()
                srcs.append(int(a))
                meas.append(PauliString.from_literal(b))
        coins = tuple(int(t) for ln in sections["COINS"] for t in ln.split())
        n_in = len(meas) + len(coins)
        rows, offs = [], []
        for ln in sections["SIGNMAP"]:
            if ln.strip():
                bits, off = ln.split()
                rows.append([0] * n_in if bits == "-" else [int(ch) for ch in bits])
                offs.append(int(off))
        eta = tuple(int(t) for ln in sections["ETA"] for t in ln.split())
        return cls(n, A, tuple(meas), tuple(srcs), coins,
                   np.array(rows, dtype=np.uint8).reshape(len(rows), n_in), np.array(offs, dtype=np.uint8),
                   eta, cases)


def compress(prog: PbcProgram, A: Optional[Sequence[int]] = None, rng=None) -> CompressedCircuit:
    """Three-case compression with ``B = complement(A)`` initialized to ``|0>``.

    ``A`` defaults to the odd qubits.  ``rng`` (optional) draws the coin values
    stored in ``coin_values``; the output structure never depends on them.
    """
    n = prog.n
    A = tuple(range(1, n, 2)) if A is None else tuple(sorted(int(a) for a in A))
    if len(set(A)) != len(A) or any(not 0 <= a < n for a in A):
        raise ValueError(f"bad subsystem A={A}")
    a_mask = sum(1 << a for a in A)
    b_mask = ((1 << n) - 1) & ~a_mask

    group = _SignedGroup(n)
    for b in range(n):
        if (b_mask >> b) & 1:
            group.add(PauliString.single(n, b, "Z"), 0)

    ops = [(p, 0) for p, _ in prog.measurements]
    N = len(ops)
    cases = []
    record_forms = [None] * N  # (const, lin) per source measurement
    q_meas, q_src, eta = [], [], []
    coins = []
    for j in range(N):
        p, pl = ops[j]
        if not p.is_hermitian:
            raise AssertionError("measured operator is not Hermitian")
        unsigned = p.unsigned()
        hit = group.first_anticommuting(unsigned)
        if hit is not None:
            # case (b): outcome is a fair coin, later operators see V_j
            qg, ql = group.order[hit]
            var = 1 << j
            cases.append(CASE_COIN)
            coins.append(j)
            record_forms[j] = (0, var)
            for t in range(j + 1, N):
                ops[t] = _conjugate_by_v(ops[t][0], ops[t][1], qg, ql, p, pl, var)
            continue
        red, rl = group.reduce(unsigned)
        if red.is_identity():
            # case (a): unsigned p times the product of signed rows is i**phase I
            if red.phase % 2:
                raise AssertionError("non-Hermitian membership residue")
            const = (red.phase // 2) ^ (p.phase // 2)
            cases.append(CASE_DETERMINISTIC)
            record_forms[j] = (const, rl ^ pl)
            continue
        # case (c): commutes with the group but is independent of it
        if unsigned.x & b_mask:
            raise CompressionError(f"operator {p.to_literal()} acts with X/Y on the |0> register")
        restricted = unsigned.restrict(A)
        var = 1 << j
        cases.append(CASE_QUANTUM)
        q_meas.append(restricted)
        q_src.append(j)
        eta.append(-1 if p.phase == 2 else 1)
        record_forms[j] = (p.phase // 2, var ^ pl)
        group.add(restricted.embed(n, A), var)

    inputs = list(q_src) + list(coins)
    col = {src: i for i, src in enumerate(inputs)}
    mat = np.zeros((N, len(inputs)), dtype=np.uint8)
    off = np.zeros(N, dtype=np.uint8)
    for j, (const, lin) in enumerate(record_forms):
        off[j] = const & 1
        while lin:
            low = lin & -lin
            mat[j, col[low.bit_length() - 1]] ^= 1
            lin ^= low
    coin_values = ()
    if rng is not None and coins:
        coin_values = tuple(int(b) for b in rng.integers(0, 2, size=len(coins)))
    return CompressedCircuit(n, A, tuple(q_meas), tuple(q_src), tuple(coins), mat, off,
                             tuple(eta), "".join(cases), coin_values)


def postprocess(raw_bits, coin_bits, cc: CompressedCircuit, circuit_id: int = 0,
                shot_id: int = 0) -> MeasurementRecord:
    """Affine F2 map from (raw quantum bits, coin bits) to the source record."""
    raw = np.asarray(raw_bits, dtype=np.uint8).reshape(-1)
    coin = np.asarray(coin_bits if coin_bits is not None else cc.coin_values, dtype=np.uint8).reshape(-1)
    if raw.size != len(cc.quantum_measurements):
        raise ValueError(f"expected {len(cc.quantum_measurements)} raw bits, got {raw.size}")
    if coin.size != len(cc.coin_flips):
        raise ValueError(f"expected {len(cc.coin_flips)} coin bits, got {coin.size}")
    v = np.concatenate([raw, coin]) & 1
    bits = ((cc.sign_matrix.astype(np.int64) @ v.astype(np.int64)) + cc.offset) & 1
    return MeasurementRecord(tuple(int(b) for b in bits), circuit_id, shot_id)


# -- gate decomposition -------------------------------------------------------

def _to_z_gate(qubit: int, char: str, flip: bool) -> Optional[CliffordGate]:
    """One-qubit Clifford C with C P C^dag = (+/-)Z; ``flip`` asks for -Z."""
    if char == "Z" and not flip:
        return None
    tab = one_qubit_table()
    pat = {"X": 1, "Z": 2, "Y": 3}[char]
    hits = np.flatnonzero((tab.out[:, pat] == 2) & (tab.sign[:, pat] == int(flip)))
    # prefer the shortest familiar gates for readability of emitted circuits
    for name in ("H", "X", "SDG", "S"):
        g = named_gate(name, qubit)
        if g.index in hits:
            return g
    return CliffordGate((qubit,), int(hits[0]))


def decompose_to_gates(cc: CompressedCircuit) -> Circuit:
    """Lower each Pauli measurement to single-qubit Cliffords, a CNOT ladder and a Z readout.

    The ladder is never undone: later operators are conjugated through all
    earlier gates instead.  Layer index = measurement index.
    """
    k = cc.k
    gates: list[CliffordGate] = []
    kind, layer, q0, q1, gidx = [], [], [], [], []

    def emit(g: CliffordGate, t: int):
        gates.append(g)
        kind.append(GATE2 if g.arity == 2 else GATE1)
        layer.append(t)
        q0.append(g.support[0])
        q1.append(g.support[1] if g.arity == 2 else -1)
        gidx.append(g.index)

    for t, p in enumerate(cc.quantum_measurements):
        cur = p
        for g in gates:
            cur = g.conjugate(cur)
        if cur.is_identity():
            raise CompressionError("identity measurement in compressed circuit")
        support = [q for q in range(k) if (cur.support >> q) & 1]
        flip = cur.phase == 2
        for i, q in enumerate(support):
            g = _to_z_gate(q, cur.char(q), flip and i == 0)
            if g is not None:
                emit(g, t)
                cur = g.conjugate(cur)
        z = cur.z
        lo, hi = support[0], support[-1]
        for q in range(lo, hi):
            if (z >> q) & 1 and not (z >> (q + 1)) & 1:
                g = named_gate("CNOT", q + 1, q)
                emit(g, t)
                cur = g.conjugate(cur)
                z = cur.z
        for q in range(lo, hi):
            g = named_gate("CNOT", q, q + 1)
            emit(g, t)
            cur = g.conjugate(cur)
        if cur != PauliString.single(k, hi, "Z"):
            raise AssertionError(f"ladder ended on {cur.to_literal()}")
        kind.append(MEASURE)
        layer.append(t)
        q0.append(hi)
        q1.append(-1)
        gidx.append(-1)
    n_layers = len(cc.quantum_measurements)
    return Circuit(k, np.array(kind, np.int8), np.array(layer, np.int64), np.array(q0, np.int64),
                   np.array(q1, np.int64), np.array(gidx, np.int64), 0, n_layers,
                   {"compressed_from": cc.n})


# -- resources -------------------------------------------------------------------

def gate_counts(c: Circuit) -> dict:
    return {
        "single_qubit": int(np.count_nonzero(c.kind == GATE1)),
        "two_qubit": int(np.count_nonzero(c.kind == GATE2)),
        "measurements": int(np.count_nonzero(c.kind == MEASURE)),
    }


def circuit_depth(c: Circuit, gates_only: bool = False) -> int:
    """ASAP depth; every gate, measurement and erasure occupies one step on its qubits."""
    free = np.zeros(max(c.L, 1), dtype=np.int64)
    depth = 0
    for k, a, b in zip(c.kind.tolist(), c.q0.tolist(), c.q1.tolist()):
        if gates_only and k not in (GATE1, GATE2):
            continue
        qs = (a, b) if k == GATE2 else (a,)
        t = max(free[q] for q in qs) + 1
        for q in qs:
            free[q] = t
        depth = max(depth, t)
    return int(depth)


def _routed_two_qubit(c: Circuit) -> int:
    # nearest-neighbour hardware in index order: swap in, act, swap back;
    # a periodic chain is laid out on a ring
    m = c.kind == GATE2
    dist = np.abs(c.q0[m] - c.q1[m])
    spec = c.meta.get("spec")
    if spec is not None and spec.connectivity == CHAIN_1D and spec.periodic:
        dist = np.minimum(dist, c.L - dist)
    return int(np.sum(1 + 2 * (dist - 1)))


@dataclass(frozen=True)
class ResourceReport:
    hardware_qubits: tuple
    depth: tuple
    two_qubit_gates: tuple
    measurement_count: tuple
    single_qubit_gates: int = 0

    def __post_init__(self):
        for name in ("hardware_qubits", "depth", "two_qubit_gates", "measurement_count"):
            if min(getattr(self, name)) < 0:
                raise ValueError(f"negative {name}")

    def to_dict(self) -> dict:
        out = {}
        for name in ("hardware_qubits", "depth", "two_qubit_gates", "measurement_count"):
            u, c = getattr(self, name)
            out[f"uncompressed_{name}"] = u
            out[f"compressed_{name}"] = c
        out["compressed_single_qubit_gates"] = self.single_qubit_gates
        return out


def resource_report(original, cc: CompressedCircuit) -> ResourceReport:
    """Table-style resource counts.  ``original`` is a CircuitSpec or a Circuit.

    Uncompressed depth counts two-qubit gate layers.  For non-adjacent gates
    the two-qubit count and depth assume SWAP routing on a line, done
    sequentially, which is the estimate behind the cubic all-to-all row.
    """
    c = build_circuit(original) if isinstance(original, CircuitSpec) else original
    routed = _routed_two_qubit(c)
    adjacent = routed == c.n_gates
    u_depth = circuit_depth(c, gates_only=True) if adjacent else routed
    dec = decompose_to_gates(cc)
    counts = gate_counts(dec)
    return ResourceReport(
        hardware_qubits=(c.L, cc.k),
        depth=(u_depth, circuit_depth(dec)),
        two_qubit_gates=(routed, counts["two_qubit"]),
        measurement_count=(c.n_measurements, counts["measurements"]),
        single_qubit_gates=counts["single_qubit"],
    )


# -- end-to-end execution helpers --------------------------------------------------

def embed_input(group_a: GeneratorSet, n: int, A: Sequence[int]) -> GeneratorSet:
    """Stabilizer group of ``|psi_A> (x) |0_B>`` on ``n`` qubits."""
    gens = [g.embed(n, A) for g in group_a]
    gens += [PauliString.single(n, b, "Z") for b in range(n) if b not in set(A)]
    return GeneratorSet(n, gens)


def uncompressed_support(c: Circuit, group_a: GeneratorSet, A: Sequence[int]) -> AffineSpace:
    return AffineSpace.from_record_map(record_map(c, InitialState.custom(embed_input(group_a, c.L, A))))


def compressed_support(cc: CompressedCircuit, group_a: GeneratorSet) -> AffineSpace:
    """Record support of compress -> gate-level execution -> postprocess, coins uniform."""
    n_q = len(cc.quantum_measurements)
    if n_q:
        raw = AffineSpace.from_record_map(record_map(decompose_to_gates(cc), InitialState.custom(group_a)))
    else:
        raw = AffineSpace(0, 0, ())
    return raw.image(cc.sign_matrix, cc.offset, len(cc.coin_flips))


def compressed_distribution(cc: CompressedCircuit, raw_distribution: dict) -> dict:
    """Push an exact raw-bit distribution through the coins and the sign map."""
    n_c = len(cc.coin_flips)
    n_q = len(cc.quantum_measurements)
    coins = ((np.arange(1 << n_c)[:, None] >> np.arange(n_c)[None, :]) & 1).astype(np.int64)
    M = cc.sign_matrix.astype(np.int64)
    weight = 1.0 / (1 << n_c)
    out: dict = {}
    for raw, pr in raw_distribution.items():
        v = np.concatenate([np.broadcast_to(np.asarray(raw, np.int64), (1 << n_c, n_q)), coins], axis=1)
        recs = (v @ M.T + cc.offset) & 1
        for rec in map(tuple, recs.tolist()):
            out[rec] = out.get(rec, 0.0) + pr * weight
    return out
