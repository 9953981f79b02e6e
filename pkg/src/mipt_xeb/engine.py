"""Fast compiled path: purified tableaux, random-branch counting and affine record maps.

Mixed initial states are purified with ancillas, and every erasure swaps the
erased qubit with one half of a fresh Bell pair, so the whole noisy circuit
acts on a pure state.  The record distribution of such a circuit is uniform
on an affine subspace of F2^N: random outcomes are free, deterministic
outcomes are affine functions of earlier random ones.  ``RecordMap`` holds
that description.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .circuits import ERASE, MEASURE, Circuit
from .clifford import one_qubit_table, two_qubit_table
from .pauli import GeneratorSet, product_phase
from .states import InitialState

__all__ = ["RecordMap", "AffineSpace", "record_map", "count_random", "purified_tableau"]


class _PyTableau:
    """Small Python-int CHP tableau used only to prepare purifications."""

    def __init__(self, n: int, destab, stab):
        self.n = n
        self.d = [list(r) for r in destab]  # [x, z]
        self.s = [list(r) for r in stab]    # [x, z, phase]

    def measure_forced(self, x: int, z: int, bit: int) -> None:
        def anti(r):
            return ((r[0] & z) ^ (r[1] & x)).bit_count() & 1

        p = next((i for i, r in enumerate(self.s) if anti(r)), None)
        if p is None:
            raise ValueError("forced measurement is deterministic; generators not independent")
        piv = self.s[p]
        for i, r in enumerate(self.s):
            if i != p and anti(r):
                r[2] = (r[2] + piv[2] + product_phase(r[0], r[1], piv[0], piv[1])) & 3
                r[0] ^= piv[0]
                r[1] ^= piv[1]
        for r in self.d:
            if anti(r):
                r[0] ^= piv[0]
                r[1] ^= piv[1]
        self.d[p] = [piv[0], piv[1]]
        self.s[p] = [x, z, 2 * bit]


def _bell_rows(a: int, b: int):
    destab = [(0, 1 << a), (1 << b, 0)]
    stab = [((1 << a) | (1 << b), 0, 0), (0, (1 << a) | (1 << b), 0)]
    return destab, stab


@lru_cache(maxsize=64)
def _base_rows(state: InitialState, L: int):
    if state.kind == "zero":
        return L, [(1 << q, 0) for q in range(L)], [(0, 1 << q, 0) for q in range(L)]
    if state.kind == "plus":
        return L, [(0, 1 << q) for q in range(L)], [(1 << q, 0, 0) for q in range(L)]
    destab, stab = [], []
    for q in range(L):
        d, s = _bell_rows(q, L + q)
        destab += d
        stab += s
    if state.kind == "mixed":
        return 2 * L, destab, stab
    # force the system onto +g for every generator g of the custom group
    tab = _PyTableau(2 * L, destab, stab)
    for g in state.group_for(L):
        tab.measure_forced(g.x, g.z, 1 if g.phase == 2 else 0)
    return 2 * L, [tuple(r) for r in tab.d], [tuple(r) for r in tab.s]


def purified_tableau(state: InitialState, L: int, n_erasures: int = 0):
    """Return (n, destab rows, stab rows, erasure ancilla start)."""
    base_n, destab, stab = _base_rows(state, L)
    destab, stab = list(destab), list(stab)
    for e in range(n_erasures):
        d, s = _bell_rows(base_n + 2 * e, base_n + 2 * e + 1)
        destab += d
        stab += s
    return base_n + 2 * n_erasures, destab, stab, base_n


def _to_words(v: int, W: int) -> np.ndarray:
    return np.frombuffer(v.to_bytes(8 * W, "little"), dtype="<u8").astype(np.uint64)


@lru_cache(maxsize=64)
def _base_arrays(state: InitialState, L: int):
    n, destab, stab, _ = purified_tableau(state, L, 0)
    W = (n + 63) // 64
    X = np.zeros((2 * n, W), dtype=np.uint64)
    Z = np.zeros((2 * n, W), dtype=np.uint64)
    neg = np.zeros(2 * n, dtype=np.uint64)
    for i, (x, z) in enumerate(destab):
        X[i] = _to_words(x, W)
        Z[i] = _to_words(z, W)
    for i, (x, z, ph) in enumerate(stab):
        X[n + i] = _to_words(x, W)
        Z[n + i] = _to_words(z, W)
        neg[n + i] = 1 if ph == 2 else 0
    for a in (X, Z, neg):
        a.setflags(write=False)
    return n, X, Z, neg


def _set(A, r, q):
    A[r, q >> 6] |= np.uint64(1) << np.uint64(q & 63)


def _arrays(state: InitialState, L: int, n_erasures: int, n_sign_words: int):
    n0, X0, Z0, neg0 = _base_arrays(state, L)
    n = n0 + 2 * n_erasures
    W = (n + 63) // 64
    W0 = X0.shape[1]
    X = np.zeros((2 * n + 1, W), dtype=np.uint64)
    Z = np.zeros((2 * n + 1, W), dtype=np.uint64)
    S = np.zeros((2 * n + 1, n_sign_words), dtype=np.uint64)
    X[:n0, :W0] = X0[:n0]
    Z[:n0, :W0] = Z0[:n0]
    X[n:n + n0, :W0] = X0[n0:]
    Z[n:n + n0, :W0] = Z0[n0:]
    if n_sign_words:
        S[n:n + n0, 0] = neg0[n0:]
    for e in range(n_erasures):
        a, b = n0 + 2 * e, n0 + 2 * e + 1
        r = n0 + 2 * e
        _set(Z, r, a)          # destabilizer partner of X_a X_b
        _set(X, r + 1, b)      # destabilizer partner of Z_a Z_b
        _set(X, n + r, a); _set(X, n + r, b)
        _set(Z, n + r + 1, a); _set(Z, n + r + 1, b)
    return n, n0, X, Z, S


def _event_arrays(c: Circuit, n0: int):
    kind = c.kind.astype(np.int64)
    q1 = c.q1.copy()
    er = np.flatnonzero(c.kind == ERASE)
    q1[er] = n0 + 2 * np.arange(len(er))
    return kind, c.q0, q1, c.gate


def _tables():
    t2, t1 = two_qubit_table(), one_qubit_table()
    return t2.out, t2.sign, t1.out, t1.sign


@lru_cache(maxsize=1)
def _basis_tables():
    t2, t1 = two_qubit_table(), one_qubit_table()
    return (np.ascontiguousarray(t2.out[:, [1, 2, 4, 8]], dtype=np.int64),
            np.ascontiguousarray(t1.out[:, [1, 2]], dtype=np.int64))


@lru_cache(maxsize=64)
def _base_columns(state: InitialState, L: int):
    n, _, stab, _ = purified_tableau(state, L, 0)
    xs = np.array([[(x >> q) & 1 for q in range(n)] for x, _, _ in stab], dtype=np.uint8)
    zs = np.array([[(z >> q) & 1 for q in range(n)] for _, z, _ in stab], dtype=np.uint8)
    return n, xs, zs


def _pack_columns(bits: np.ndarray, R: int) -> np.ndarray:
    # bits: (rows, qubits) -> (qubits, R) packed little-endian over rows
    rows = bits.shape[0]
    padded = np.zeros((64 * R, bits.shape[1]), dtype=np.uint8)
    padded[:rows] = bits
    packed = np.packbits(padded.T, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64).reshape(bits.shape[1], R)


def count_random(c: Circuit, state: InitialState) -> int:
    """Number of measurements taking the random branch (sign-independent)."""
    if c.n_measurements == 0:
        return 0
    n0, xs0, zs0 = _base_columns(state, c.L)
    ne = c.n_erasures
    n = n0 + 2 * ne
    xs = np.zeros((n, n), dtype=np.uint8)
    zs = np.zeros((n, n), dtype=np.uint8)
    xs[:n0, :n0] = xs0
    zs[:n0, :n0] = zs0
    for e in range(ne):
        a, b = n0 + 2 * e, n0 + 2 * e + 1
        xs[a, a] = xs[a, b] = 1
        zs[b, a] = zs[b, b] = 1
    R = (n + 63) // 64
    Xc = _pack_columns(xs, R)
    Zc = _pack_columns(zs, R)
    kind, q0, q1, gate = _event_arrays(c, n0)
    return _kernels.count_random_columns(Xc, Zc, n, kind, q0, q1, gate, *_basis_tables())


def count_random_rows(c: Circuit, state: InitialState) -> int:
    """Same count via the signed row-major kernel with signs disabled."""
    n_meas = c.n_measurements
    if n_meas == 0:
        return 0
    n, n0, X, Z, _ = _arrays(state, c.L, c.n_erasures, 0)
    kind, q0, q1, gate = _event_arrays(c, n0)
    return _kernels.count_random(X, Z, n, kind, q0, q1, gate, *_tables(), n_meas)


@dataclass(frozen=True)
class RecordMap:
    """Support of a record distribution as an affine map over random outcomes.

    ``is_random[j]`` marks free outcomes.  For deterministic ``j``,
    ``forms[j]`` is a Python int whose bit 0 is the constant and bit ``i+1``
    the coefficient of outcome ``i``; the record satisfies
    ``m_j = <forms[j], (1, m)>``.  The distribution is uniform on the support.
    """

    n: int
    is_random: np.ndarray
    forms: tuple

    @property
    def n_random(self) -> int:
        return int(self.is_random.sum())

    def constraints(self) -> list[int]:
        """Parity checks ``c`` with ``<c, (1, m)> = 0`` on every supported record."""
        return [f ^ (1 << (j + 1)) for j, f in enumerate(self.forms) if not self.is_random[j]]

    def sample(self, bits) -> np.ndarray:
        """Complete a record from an iterator of fresh bits (one per random outcome)."""
        rec = 1  # bit 0 is the constant
        out = np.zeros(self.n, dtype=np.uint8)
        it = iter(bits)
        for j in range(self.n):
            if self.is_random[j]:
                b = int(next(it)) & 1
            else:
                b = (self.forms[j] & rec).bit_count() & 1
            out[j] = b
            rec |= b << (j + 1)
        return out

    def contains(self, record) -> bool:
        rec = 1
        for j, b in enumerate(record):
            rec |= (int(b) & 1) << (j + 1)
        return all((c & rec).bit_count() % 2 == 0 for c in self.constraints())


def record_map(c: Circuit, state: InitialState) -> RecordMap:
    n_meas = c.n_measurements
    V = (n_meas + 1 + 63) // 64
    n, n0, X, Z, S = _arrays(state, c.L, c.n_erasures, V)
    kind, q0, q1, gate = _event_arrays(c, n0)
    forms = np.zeros((max(n_meas, 1), V), dtype=np.uint64)
    is_random = np.zeros(max(n_meas, 1), dtype=np.uint8)
    _kernels.run_tableau(X, Z, S, n, kind, q0, q1, gate, *_tables(), forms, is_random)
    ints = tuple(int.from_bytes(forms[j].astype("<u8").tobytes(), "little") for j in range(n_meas))
    return RecordMap(n_meas, is_random[:n_meas].astype(bool), ints)


def _rref(vectors) -> tuple:
    rows: dict[int, int] = {}
    for v in vectors:
        for piv in sorted(rows, reverse=True):
            if (v >> piv) & 1:
                v ^= rows[piv]
        if v:
            piv = v.bit_length() - 1
            for q in list(rows):
                if (rows[q] >> piv) & 1:
                    rows[q] ^= v
            rows[piv] = v
    return tuple(rows[k] for k in sorted(rows, reverse=True))


@dataclass(frozen=True)
class AffineSpace:
    """Canonical ``offset + span(basis)`` in F2^n; bit ``j`` of an int is coordinate ``j``.

    Two supports compare equal exactly when they are the same set, so two
    uniform record distributions are identical iff their spaces are.
    """

    n: int
    offset: int
    basis: tuple

    @classmethod
    def make(cls, n: int, offset: int, vectors) -> "AffineSpace":
        basis = _rref(vectors)
        for b in basis:
            if (offset >> (b.bit_length() - 1)) & 1:
                offset ^= b
        return cls(n, offset, basis)

    @classmethod
    def from_record_map(cls, rm: RecordMap) -> "AffineSpace":
        def pack(bits):
            return sum(int(b) << j for j, b in enumerate(bits))
        k = rm.n_random
        off = pack(rm.sample([0] * k))
        vecs = []
        for i in range(k):
            e = [0] * k
            e[i] = 1
            vecs.append(pack(rm.sample(e)) ^ off)
        return cls.make(rm.n, off, vecs)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def image(self, matrix: np.ndarray, offset: np.ndarray, n_extra_free: int = 0) -> "AffineSpace":
        """Image under ``v -> M (v, c) + offset`` where ``c`` ranges over ``n_extra_free`` free bits."""
        M = np.asarray(matrix, dtype=np.uint8)
        n_out = M.shape[0]
        cols = [sum(int(M[r, j]) << r for r in range(n_out)) for j in range(M.shape[1])]

        def apply(v: int) -> int:
            acc = 0
            for j in range(self.n):
                if (v >> j) & 1:
                    acc ^= cols[j]
            return acc

        off = apply(self.offset) ^ sum(int(b) << r for r, b in enumerate(offset))
        vecs = [apply(b) for b in self.basis] + cols[self.n:self.n + n_extra_free]
        return AffineSpace.make(n_out, off, vecs)

    def contains(self, record) -> bool:
        v = sum(int(b) << j for j, b in enumerate(record)) ^ self.offset
        for b in self.basis:
            if (v >> (b.bit_length() - 1)) & 1:
                v ^= b
        return v == 0
