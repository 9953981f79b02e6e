"""Brute-force dense simulation for small registers.

Basis index bit ``k`` is qubit ``k``.  Pure states are 2**n amplitude
vectors; mixed states are 2**n x 2**n density matrices.  Paulis act by
index permutation and phases, so no 4**n operator is ever formed for a
pure state.  Record distributions come from depth-first enumeration of
measurement branches with exact projectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .circuits import ERASE, GATE1, GATE2, MEASURE, Circuit
from .clifford import CliffordGate, _table
from .pauli import GeneratorSet, PauliString

__all__ = [
    "DenseState",
    "BudgetError",
    "pauli_matrix",
    "pauli_action",
    "gate_unitary",
    "density_from_generators",
    "enumerate_records",
    "exact_chi_dense",
    "tvd",
    "T_AMPLITUDE",
]

MAX_QUBITS = 14
MAX_MIXED_QUBITS = 7
TOL = 1e-10
_PRUNE = 1e-13

T_AMPLITUDE = np.exp(1j * np.pi / 4) / math.sqrt(2)


class BudgetError(RuntimeError):
    """Enumeration would exceed the configured branch or size budget."""


def pauli_action(n: int, p: PauliString):
    """Return (perm, coeff) with ``P|b> = coeff[b] |perm[b]>``."""
    b = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros(1 << n, dtype=np.int64)
    zb = b & p.z
    for k in range(n):
        parity ^= (zb >> k) & 1
    n_y = (p.x & p.z).bit_count()
    coeff = (1j ** ((p.phase + n_y) % 4)) * (1 - 2 * parity)
    return b ^ p.x, coeff.astype(complex)


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense 2**n x 2**n matrix of ``p`` (small n only)."""
    perm, coeff = pauli_action(p.n, p)
    m = np.zeros((1 << p.n, 1 << p.n), dtype=complex)
    m[perm, np.arange(1 << p.n)] = coeff
    return m


def _apply_pauli_vec(vec: np.ndarray, n: int, p: PauliString) -> np.ndarray:
    perm, coeff = pauli_action(n, p)
    out = np.empty_like(vec)
    out[perm] = coeff * vec
    return out


@lru_cache(maxsize=None)
def _gate_unitary_cached(nq: int, index: int) -> np.ndarray:
    tab = _table(nq)
    dim = 1 << nq
    paulis = []
    for pat in range(4 ** nq):
        x = z = 0
        for k in range(nq):
            x |= ((pat >> (2 * k)) & 1) << k
            z |= ((pat >> (2 * k + 1)) & 1) << k
        paulis.append((pat, PauliString(nq, x, z, 0)))

    def image(pat):
        out = int(tab.out[index, pat])
        x = z = 0
        for k in range(nq):
            x |= ((out >> (2 * k)) & 1) << k
            z |= ((out >> (2 * k + 1)) & 1) << k
        return PauliString(nq, x, z, 2 * int(tab.sign[index, pat]))

    # With D = U Q:  sum_P (D P D^dag) P^dag = 2**nq tr(D^dag) D, and
    # D P D^dag = +-(U P U^dag) depending on whether P and Q commute.
    for _, q in paulis:
        acc = np.zeros((dim, dim), dtype=complex)
        for pat, p in paulis:
            anti = ((p.x & q.z) ^ (p.z & q.x)).bit_count() & 1
            acc += (-1 if anti else 1) * pauli_matrix(image(pat)) @ pauli_matrix(p).conj().T
        if np.linalg.norm(acc) > 1e-9:
            u = acc @ pauli_matrix(q)
            return u / math.sqrt((u.conj().T @ u)[0, 0].real)
    raise AssertionError("could not reconstruct Clifford unitary")


def gate_unitary(gate: CliffordGate) -> np.ndarray:
    """Dense unitary (up to global phase) on the gate's local support."""
    return _gate_unitary_cached(gate.arity, gate.index)


def density_from_generators(group: GeneratorSet) -> np.ndarray:
    """2**-n * sum over the group of its elements, built as a projector product."""
    n = group.n
    dim = 1 << n
    rho = np.eye(dim, dtype=complex)
    for g in group.generators:
        rho = rho @ (np.eye(dim) + pauli_matrix(g)) / 2
    return rho / (2 ** (n - len(group)))


def _apply_local(vec: np.ndarray, n: int, u: np.ndarray, support) -> np.ndarray:
    """Apply a local operator to axis/axes of a state vector (or density-matrix rows)."""
    k = len(support)
    t = vec.reshape((2,) * n + vec.shape[1:])
    axes = [n - 1 - q for q in reversed(support)]  # u's row index bit j is support[j]
    ut = u.reshape((2,) * (2 * k))
    t = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(vec.shape)


@dataclass
class DenseState:
    """Pure (``vec``) or mixed (``rho``) state on ``n`` qubits."""

    n: int
    vec: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n > MAX_QUBITS:
            raise BudgetError(f"dense oracle limited to {MAX_QUBITS} qubits")
        if (self.vec is None) == (self.rho is None):
            raise ValueError("give exactly one of vec or rho")

    # -- constructors ----------------------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "DenseState":
        v = np.zeros(1 << n, dtype=complex)
        v[0] = 1
        return cls(n, vec=v)

    @classmethod
    def product(cls, single: list) -> "DenseState":
        v = np.ones(1, dtype=complex)
        for s in single:  # qubit k is bit k: later qubits are more significant
            v = np.kron(np.asarray(s, dtype=complex), v)
        return cls(len(single), vec=v)

    @classmethod
    def plus(cls, n: int) -> "DenseState":
        return cls.product([[1 / math.sqrt(2), 1 / math.sqrt(2)]] * n)

    @classmethod
    def alternating_magic(cls, n: int) -> "DenseState":
        """|0 T 0 T ...>: even qubits |0>, odd qubits |T>."""
        t = [1 / math.sqrt(2), T_AMPLITUDE]
        return cls.product([[1, 0] if k % 2 == 0 else t for k in range(n)])

    @classmethod
    def maximally_mixed(cls, n: int) -> "DenseState":
        return cls(n, rho=np.eye(1 << n, dtype=complex) / (1 << n))

    @classmethod
    def from_generators(cls, group: GeneratorSet) -> "DenseState":
        return cls(group.n, rho=density_from_generators(group))

    @classmethod
    def from_initial(cls, state, L: int) -> "DenseState":
        if state.kind == "zero":
            return cls.zero(L)
        if state.kind == "plus":
            return cls.plus(L)
        return cls.from_generators(state.group_for(L))

    # -- views -------------------------------------------------------------------
    @property
    def is_pure(self) -> bool:
        return self.vec is not None

    def density(self) -> np.ndarray:
        if self.rho is not None:
            return self.rho
        return np.outer(self.vec, self.vec.conj())

    def to_mixed(self) -> "DenseState":
        if self.n > MAX_MIXED_QUBITS:
            raise BudgetError(f"mixed mode limited to {MAX_MIXED_QUBITS} qubits")
        return DenseState(self.n, rho=self.density())

    def copy(self) -> "DenseState":
        return DenseState(self.n, None if self.vec is None else self.vec.copy(),
                          None if self.rho is None else self.rho.copy())

    def trace(self) -> float:
        return float(np.vdot(self.vec, self.vec).real) if self.is_pure else float(np.trace(self.rho).real)

    def check(self, tol: float = TOL) -> None:
        if self.is_pure:
            if abs(self.trace() - 1) > tol:
                raise AssertionError("state not normalised")
        else:
            if abs(self.trace() - 1) > tol:
                raise AssertionError("trace differs from 1")
            if np.linalg.eigvalsh((self.rho + self.rho.conj().T) / 2).min() < -tol:
                raise AssertionError("density matrix not positive semidefinite")

    # -- operations (in place) ------------------------------------------------------------
    def apply_unitary(self, u: np.ndarray, support) -> "DenseState":
        if self.is_pure:
            self.vec = _apply_local(self.vec, self.n, u, support)
        else:
            r = _apply_local(self.rho, self.n, u, support)
            self.rho = _apply_local(r.conj().T, self.n, u, support).conj().T
        return self

    def apply_gate(self, gate: CliffordGate) -> "DenseState":
        return self.apply_unitary(gate_unitary(gate), gate.support)

    def apply_pauli(self, p: PauliString) -> "DenseState":
        perm, coeff = pauli_action(self.n, p)
        if self.is_pure:
            out = np.empty_like(self.vec)
            out[perm] = coeff * self.vec
            self.vec = out
        else:
            r = np.empty_like(self.rho)
            r[perm, :] = coeff[:, None] * self.rho
            out = np.empty_like(r)
            out[:, perm] = r * coeff.conj()[None, :]
            self.rho = out
        return self

    def project(self, p: PauliString, bit: int) -> float:
        """Apply (1 + (-1)**bit P)/2 unnormalised; return the branch probability."""
        s = -1.0 if bit else 1.0
        if self.is_pure:
            pv = _apply_pauli_vec(self.vec, self.n, p)
            self.vec = (self.vec + s * pv) / 2
            return float(np.vdot(self.vec, self.vec).real)
        perm, coeff = pauli_action(self.n, p)
        left = np.empty_like(self.rho)
        left[perm, :] = coeff[:, None] * self.rho
        a = (self.rho + s * left) / 2
        right = np.empty_like(a)
        right[:, perm] = a * coeff.conj()[None, :]
        self.rho = (a + s * right) / 2
        return float(np.trace(self.rho).real)

    def normalize(self) -> "DenseState":
        t = self.trace()
        if self.is_pure:
            self.vec = self.vec / math.sqrt(t)
        else:
            self.rho = self.rho / t
        return self

    def dephase(self, p: PauliString) -> "DenseState":
        if self.is_pure:
            raise ValueError("dephasing needs mixed mode")
        other = self.copy().apply_pauli(p)
        self.rho = (self.rho + other.rho) / 2
        return self

    def erase(self, qubit: int) -> "DenseState":
        """Replace ``qubit`` by the maximally mixed state (switches to mixed mode)."""
        if self.is_pure:
            mixed = self.to_mixed()
            self.vec, self.rho = None, mixed.rho
        acc = np.zeros_like(self.rho)
        for kind in "IXYZ":
            acc += self.copy().apply_pauli(PauliString.single(self.n, qubit, kind)).rho
        self.rho = acc / 4
        return self

    def expectation(self, p: PauliString) -> float:
        if self.is_pure:
            return float(np.vdot(self.vec, _apply_pauli_vec(self.vec, self.n, p)).real)
        return float(np.trace(pauli_matrix(p) @ self.rho).real)

    def partial_trace(self, keep) -> np.ndarray:
        keep = list(keep)
        rho = self.density().reshape((2,) * (2 * self.n))
        n = self.n
        drop = [q for q in range(n) if q not in keep]
        # axis of qubit q is n-1-q (row) and 2n-1-q (column)
        letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
        row = [letters[i] for i in range(n)]
        col = [letters[n + i] for i in range(n)]
        for q in drop:
            col[n - 1 - q] = row[n - 1 - q]
        kept_axes = sorted(keep, reverse=True)  # most significant first
        out_row = "".join(row[n - 1 - q] for q in kept_axes)
        out_col = "".join(col[n - 1 - q] for q in kept_axes)
        res = np.einsum("".join(row) + "".join(col) + "->" + out_row + out_col, rho)
        d = 1 << len(keep)
        return res.reshape(d, d)


def _check_budget(c: Circuit, max_measurements: int) -> None:
    if c.n_measurements > max_measurements:
        raise BudgetError(f"{c.n_measurements} measurements exceed the budget of {max_measurements}")
    if c.L > MAX_QUBITS:
        raise BudgetError(f"{c.L} qubits exceed the dense limit of {MAX_QUBITS}")


def _enumerate_batched(c: Circuit, vec: np.ndarray, meas_ops) -> dict:
    """Breadth-first enumeration of a pure, erasure-free run.

    All live branches are stacked in one (B, 2**n) array and kept
    unnormalised, so a branch's probability is its squared norm.
    """
    n = c.L
    vecs = vec[None, :].copy()
    recs = np.zeros((1, 0), dtype=np.uint8)
    j = 0
    for k, a, b, g in zip(c.kind.tolist(), c.q0.tolist(), c.q1.tolist(), c.gate.tolist()):
        if k == GATE2 or k == GATE1:
            support = (a, b) if k == GATE2 else (a,)
            u = gate_unitary(CliffordGate(support, g))
            B = vecs.shape[0]
            t = vecs.reshape((B,) + (2,) * n)
            axes = [1 + n - 1 - q for q in reversed(support)]
            nq = len(support)
            t = np.tensordot(u.reshape((2,) * (2 * nq)), t, axes=(list(range(nq, 2 * nq)), axes))
            vecs = np.moveaxis(t, list(range(nq)), axes).reshape(B, -1)
            continue
        p = meas_ops[j] if meas_ops is not None else PauliString.single(n, a, "Z")
        perm, coeff = pauli_action(n, p)
        pv = np.empty_like(vecs)
        pv[:, perm] = coeff[None, :] * vecs
        both = np.concatenate([(vecs + pv) / 2, (vecs - pv) / 2])
        bits = np.repeat(np.array([0, 1], dtype=np.uint8), vecs.shape[0])
        keep = np.einsum("ij,ij->i", both.conj(), both).real > _PRUNE
        recs = np.concatenate([np.tile(recs, (2, 1)), bits[:, None]], axis=1)[keep]
        vecs = both[keep]
        j += 1
    probs = np.einsum("ij,ij->i", vecs.conj(), vecs).real
    out: dict = {}
    for rec, pr in zip(map(tuple, recs.tolist()), probs.tolist()):
        out[rec] = out.get(rec, 0.0) + pr
    return out


def enumerate_records(c: Circuit, initial: DenseState, max_measurements: int = 20,
                      measurements=None, method: str = "auto") -> dict:
    """Exact map record tuple -> probability.

    ``measurements`` optionally overrides the measured Pauli for each MEASURE
    event (in order); by default MEASURE on ``q`` measures ``Z_q``.
    ``method`` is "dfs" (depth-first, any state), "batch" (pure states without
    erasures, vectorised) or "auto".
    """
    _check_budget(c, max_measurements)
    if initial.n != c.L:
        raise ValueError("state and circuit sizes differ")
    meas_ops = list(measurements) if measurements is not None else None
    if meas_ops is not None and len(meas_ops) != c.n_measurements:
        raise ValueError("one measured Pauli per MEASURE event is required")
    batch_ok = initial.is_pure and not c.is_noisy
    if method == "batch" and not batch_ok:
        raise ValueError("batched enumeration needs a pure state and no erasures")
    if method not in ("auto", "dfs", "batch"):
        raise ValueError(f"unknown method {method!r}")
    if method != "dfs" and batch_ok:
        return _enumerate_batched(c, initial.vec, meas_ops)

    events = list(zip(c.kind.tolist(), c.q0.tolist(), c.q1.tolist(), c.gate.tolist()))
    out: dict = {}

    def walk(state: DenseState, start: int, j: int, prob: float, bits: tuple):
        for e in range(start, len(events)):
            k, a, b, g = events[e]
            if k == GATE2:
                state.apply_gate(CliffordGate((a, b), g))
            elif k == GATE1:
                state.apply_gate(CliffordGate((a,), g))
            elif k == ERASE:
                state.erase(a)
            else:
                p = meas_ops[j] if meas_ops is not None else PauliString.single(c.L, a, "Z")
                for bit in (0, 1):
                    branch = state.copy() if bit == 0 else state
                    pr = branch.project(p, bit)
                    if pr > _PRUNE:
                        branch.normalize()
                        walk(branch, e + 1, j + 1, prob * pr, bits + (bit,))
                return
        out[bits] = out.get(bits, 0.0) + prob

    walk(initial.copy(), 0, 0, 1.0, ())
    return out


def exact_chi_dense(noisy: Circuit, clean: Circuit, rho: DenseState, sigma: DenseState,
                    max_measurements: int = 20) -> float:
    """Cross entropy evaluated literally from the two record distributions."""
    d_rho = enumerate_records(noisy, rho, max_measurements)
    d_sigma = enumerate_records(clean, sigma, max_measurements)
    if noisy.n_measurements == 0:
        return 1.0
    num = sum(pr * d_sigma.get(m, 0.0) for m, pr in d_rho.items())
    den = sum(ps * ps for ps in d_sigma.values())
    return float(num / den)


def tvd(a: dict, b: dict) -> float:
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
