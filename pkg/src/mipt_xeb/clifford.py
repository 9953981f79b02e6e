"""One- and two-qubit Clifford groups as signed lookup tables.

A two-qubit Clifford (modulo global phase) is fixed by the signed images of
XI, ZI, IX, IZ.  Every Hermitian Pauli on the support is encoded as a 4-bit
pattern ``x0 | z0 << 1 | x1 << 2 | z1 << 3``; the tables give, for each
element and each input pattern, the output pattern and whether the image
picks up a minus sign.  The tables are generated once by breadth-first
search over words in H, S and CNOT and sorted into a canonical order, so an
index into the table is a stable name for a group element.
"""
from __future__ import annotations

from collections import deque
from functools import lru_cache
from typing import Sequence

import numpy as np

from .pauli import PauliString, pauli_mul

__all__ = [
    "CliffordGate",
    "two_qubit_table",
    "one_qubit_table",
    "sample_two_qubit_clifford",
    "apply_to_pauli",
    "named_gate",
    "N_TWO_QUBIT",
    "N_ONE_QUBIT",
]

N_TWO_QUBIT = 11520
N_ONE_QUBIT = 24

_PAULI_CHARS = "IXZY"


def _pattern_pauli(nq: int, pat: int) -> PauliString:
    x = z = 0
    for k in range(nq):
        x |= ((pat >> (2 * k)) & 1) << k
        z |= ((pat >> (2 * k + 1)) & 1) << k
    return PauliString(nq, x, z, 0)


def _pauli_pattern(p: PauliString) -> int:
    pat = 0
    for k in range(p.n):
        pat |= ((p.x >> k) & 1) << (2 * k) | ((p.z >> k) & 1) << (2 * k + 1)
    return pat


def _images_to_lookup(nq: int, images: Sequence[tuple[int, int]]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Expand generator images (sign bit, pattern) to all 4**nq patterns."""
    gens = [_pattern_pauli(nq, pat).with_sign(-1 if s else 1) for s, pat in images]
    out_pat = []
    out_sign = []
    for pat in range(4 ** nq):
        acc = PauliString(nq)
        n_y = 0
        for k in range(nq):
            xb = (pat >> (2 * k)) & 1
            zb = (pat >> (2 * k + 1)) & 1
            n_y += xb & zb
            if xb:
                acc = pauli_mul(acc, gens[2 * k])
            if zb:
                acc = pauli_mul(acc, gens[2 * k + 1])
        # Y = i X Z on each qubit
        phase = (acc.phase + n_y) & 3
        if phase % 2:
            raise AssertionError("Clifford image is not Hermitian")
        out_pat.append(_pauli_pattern(acc))
        out_sign.append(phase >> 1)
    return tuple(out_pat), tuple(out_sign)


def _compose(nq: int, first: tuple, second_lookup: tuple) -> tuple:
    """Images of the generators under ``second ∘ first``."""
    pats, signs = second_lookup
    return tuple((s ^ signs[p], pats[p]) for s, p in first)


def _enumerate_group(nq: int) -> list[tuple[tuple[int, int], ...]]:
    ident = tuple((0, 1 << j) for j in range(2 * nq))

    def lookup(images):
        return _images_to_lookup(nq, images)

    def single(q: int, kind: str):
        # images of X_q, Z_q for H or S on qubit q; other generators fixed
        imgs = list(ident)
        xq, zq = 1 << (2 * q), 1 << (2 * q + 1)
        if kind == "H":
            imgs[2 * q] = (0, zq)
            imgs[2 * q + 1] = (0, xq)
        else:  # S: X -> Y, Z -> Z
            imgs[2 * q] = (0, xq | zq)
        return lookup(tuple(imgs))

    gen_lookups = [single(q, k) for q in range(nq) for k in ("H", "S")]
    if nq == 2:
        # CNOT 0 -> 1: X0 -> X0 X1, Z0 -> Z0, X1 -> X1, Z1 -> Z0 Z1
        gen_lookups.append(lookup(((0, 0b0101), (0, 0b0010), (0, 0b0100), (0, 0b1010))))
    seen = {ident}
    queue = deque([ident])
    while queue:
        el = queue.popleft()
        for lk in gen_lookups:
            nxt = _compose(nq, el, lk)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return sorted(seen)


class _Table:
    def __init__(self, nq: int):
        elements = _enumerate_group(nq)
        self.nq = nq
        self.elements = elements
        self.index = {el: i for i, el in enumerate(elements)}
        npat = 4 ** nq
        self.out = np.zeros((len(elements), npat), dtype=np.uint8)
        self.sign = np.zeros((len(elements), npat), dtype=np.uint8)
        for i, el in enumerate(elements):
            pats, signs = _images_to_lookup(nq, el)
            self.out[i] = pats
            self.sign[i] = signs
        self.out.setflags(write=False)
        self.sign.setflags(write=False)
        self.inverse = np.zeros(len(elements), dtype=np.int64)
        for i in range(len(elements)):
            inv = []
            for j in range(2 * nq):
                target = 1 << j
                src = int(np.nonzero(self.out[i] == target)[0][0])
                inv.append((int(self.sign[i, src]), src))
            self.inverse[i] = self.index[tuple(inv)]
        self.inverse.setflags(write=False)

    def __len__(self) -> int:
        return len(self.elements)

    def find(self, images: Sequence[tuple[int, int]]) -> int:
        return self.index[tuple((int(s), int(p)) for s, p in images)]


@lru_cache(maxsize=None)
def two_qubit_table() -> _Table:
    return _Table(2)


@lru_cache(maxsize=None)
def one_qubit_table() -> _Table:
    return _Table(1)


def _table(nq: int) -> _Table:
    return two_qubit_table() if nq == 2 else one_qubit_table()


def apply_to_pauli(p: PauliString, table_index: int, support: Sequence[int]) -> PauliString:
    """Conjugate ``p`` by the Clifford ``table_index`` acting on ``support``."""
    tab = _table(len(support))
    pat = 0
    for k, q in enumerate(support):
        pat |= ((p.x >> q) & 1) << (2 * k) | ((p.z >> q) & 1) << (2 * k + 1)
    new = int(tab.out[table_index, pat])
    x, z = p.x, p.z
    for k, q in enumerate(support):
        bit = 1 << q
        x = (x & ~bit) | (((new >> (2 * k)) & 1) << q)
        z = (z & ~bit) | (((new >> (2 * k + 1)) & 1) << q)
    return PauliString(p.n, x, z, p.phase + 2 * int(tab.sign[table_index, pat]))


class CliffordGate:
    """A one- or two-qubit Clifford placed on specific qubits."""

    __slots__ = ("support", "index")

    def __init__(self, support: Sequence[int], index: int):
        support = tuple(int(q) for q in support)
        if len(support) not in (1, 2) or len(set(support)) != len(support):
            raise ValueError(f"bad gate support {support}")
        if not 0 <= index < len(_table(len(support))):
            raise ValueError(f"gate index {index} out of range")
        self.support = support
        self.index = int(index)

    @property
    def arity(self) -> int:
        return len(self.support)

    @property
    def tableau_action(self) -> list[PauliString]:
        """Signed images of X_0, Z_0 (, X_1, Z_1) on the local support."""
        nq = self.arity
        tab = _table(nq)
        return [
            _pattern_pauli(nq, int(tab.out[self.index, 1 << j])).with_sign(-1 if tab.sign[self.index, 1 << j] else 1)
            for j in range(2 * nq)
        ]

    def inverse(self) -> "CliffordGate":
        return CliffordGate(self.support, int(_table(self.arity).inverse[self.index]))

    def conjugate(self, p: PauliString) -> PauliString:
        """Return ``U p U^dagger``."""
        return apply_to_pauli(p, self.index, self.support)

    def is_symplectic(self) -> bool:
        imgs = self.tableau_action
        nq = self.arity
        for i in range(2 * nq):
            if not imgs[i].is_hermitian:
                return False
            for j in range(2 * nq):
                # X_k and Z_k anticommute; everything else commutes
                expect_anti = (i // 2 == j // 2) and i != j
                anti = ((imgs[i].x & imgs[j].z) ^ (imgs[i].z & imgs[j].x)).bit_count() & 1
                if bool(anti) != expect_anti:
                    return False
        return True

    # literal: per generator "XI:+ZX" (two-qubit) or "X:+Z" (one-qubit)
    def to_literal(self) -> str:
        nq = self.arity
        names = ["XI", "ZI", "IX", "IZ"] if nq == 2 else ["X", "Z"]
        parts = []
        for name, img in zip(names, self.tableau_action):
            parts.append(f"{name}:{img.to_literal()}")
        return "".join(parts)

    @classmethod
    def from_literal(cls, support: Sequence[int], text: str) -> "CliffordGate":
        nq = len(support)
        names = ["XI", "ZI", "IX", "IZ"] if nq == 2 else ["X", "Z"]
        width = 2 * nq + 2
        if len(text) != width * len(names):
            raise ValueError(f"bad Clifford literal {text!r}")
        images = []
        for j, name in enumerate(names):
            field = text[j * width:(j + 1) * width]
            if field[:nq] != name or field[nq] != ":":
                raise ValueError(f"bad Clifford literal field {field!r}")
            img = PauliString.from_literal(field[nq + 1:])
            images.append((1 if img.phase == 2 else 0, _pauli_pattern(img)))
        return cls(support, _table(nq).find(images))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CliffordGate):
            return NotImplemented
        return self.support == other.support and self.index == other.index

    def __hash__(self) -> int:
        return hash((self.support, self.index))

    def __repr__(self) -> str:
        return f"CliffordGate({self.support}, {self.to_literal()!r})"


def named_gate(name: str, *qubits: int) -> CliffordGate:
    """Common gates: H, S, SDG, X, Y, Z, I (one qubit); CNOT, CZ, SWAP (two)."""
    name = name.upper()
    one = {
        "I": ((0, 0b01), (0, 0b10)),
        "H": ((0, 0b10), (0, 0b01)),
        "S": ((0, 0b11), (0, 0b10)),
        "SDG": ((1, 0b11), (0, 0b10)),
        "X": ((0, 0b01), (1, 0b10)),
        "Z": ((1, 0b01), (0, 0b10)),
        "Y": ((1, 0b01), (1, 0b10)),
    }
    two = {
        "CNOT": ((0, 0b0101), (0, 0b0010), (0, 0b0100), (0, 0b1010)),
        "CX": ((0, 0b0101), (0, 0b0010), (0, 0b0100), (0, 0b1010)),
        "CZ": ((0, 0b1001), (0, 0b0010), (0, 0b0110), (0, 0b1000)),
        "SWAP": ((0, 0b0100), (0, 0b1000), (0, 0b0001), (0, 0b0010)),
        "II": ((0, 0b0001), (0, 0b0010), (0, 0b0100), (0, 0b1000)),
    }
    if name in one:
        return CliffordGate(qubits, one_qubit_table().find(one[name]))
    return CliffordGate(qubits, two_qubit_table().find(two[name]))


def sample_two_qubit_clifford(rng: np.random.Generator, qubits: Sequence[int] = (0, 1)) -> CliffordGate:
    """Uniformly random two-qubit Clifford (modulo global phase)."""
    return CliffordGate(qubits, int(rng.integers(N_TWO_QUBIT)))
