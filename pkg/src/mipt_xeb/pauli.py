"""Bit-packed Pauli strings and signed stabilizer groups.

A Pauli string on ``n`` qubits is stored as two Python integers used as
bit-sets (bit ``k`` is qubit ``k``) plus a phase exponent ``phase`` so that
the operator is ``i**phase * P_0 ⊗ ... ⊗ P_{n-1}`` with ``P_k`` one of
I, X, Z, Y for ``(x_k, z_k)`` equal to (0,0), (1,0), (0,1), (1,1).  In this
convention the Hermitian strings are exactly those with ``phase`` in {0, 2}.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

__all__ = [
    "PauliString",
    "GeneratorSet",
    "DimensionError",
    "pauli_mul",
    "commutes",
    "membership",
    "group_intersection_size",
    "product_phase",
]

_CHARS = "IXZY"  # index = x | z << 1


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


def product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Phase exponent (mod 4) picked up by the qubit-wise product P1 * P2."""
    # +i cases: XY, YZ, ZX ; -i cases: XZ, YX, ZY
    y1 = x1 & z1
    y2 = x2 & z2
    ox1 = x1 & ~z1
    oz1 = z1 & ~x1
    ox2 = x2 & ~z2
    oz2 = z2 & ~x2
    plus = (ox1 & y2) | (y1 & oz2) | (oz1 & ox2)
    minus = (ox1 & oz2) | (y1 & ox2) | (oz1 & y2)
    return (plus.bit_count() - minus.bit_count()) & 3


class PauliString:
    """An ``n``-qubit Pauli operator with an exact power-of-``i`` phase."""

    __slots__ = ("n", "x", "z", "phase")

    def __init__(self, n: int, x: int = 0, z: int = 0, phase: int = 0):
        if n < 0:
            raise ValueError("qubit count must be non-negative")
        mask = (1 << n) - 1
        if x & ~mask or z & ~mask:
            raise ValueError("bit-vector longer than qubit count")
        self.n = n
        self.x = x
        self.z = z
        self.phase = phase & 3

    # -- construction -----------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_literal(cls, text: str) -> "PauliString":
        """Parse ``"-XIZY"``: optional sign, then one of IXYZ per qubit.

        A signed prefix with a lowercase ``i`` (``"+iXZ"``, ``"-iXZ"``) gives the
        non-Hermitian phases, mirroring ``to_literal``.
        """
        text = text.strip()
        phase = 0
        if text[:2] in ("+i", "-i"):
            phase = 1 if text[0] == "+" else 3
            text = text[2:]
        elif text[:1] in ("+", "-"):
            phase = 2 if text[0] == "-" else 0
            text = text[1:]
        x = z = 0
        for k, ch in enumerate(text.upper()):
            code = _CHARS.find(ch)
            if code < 0:
                raise ValueError(f"bad Pauli character {ch!r}")
            x |= (code & 1) << k
            z |= (code >> 1) << k
        return cls(len(text), x, z, phase)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str, sign: int = 1) -> "PauliString":
        code = _CHARS.index(kind.upper())
        return cls(n, (code & 1) << qubit, (code >> 1) << qubit, 0 if sign > 0 else 2)

    # -- queries ----------------------------------------------------------
    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        if self.phase % 2:
            raise ValueError("non-Hermitian Pauli has no real sign")
        return -1 if self.phase == 2 else 1

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return not (self.x | self.z)

    def char(self, qubit: int) -> str:
        return _CHARS[((self.x >> qubit) & 1) | (((self.z >> qubit) & 1) << 1)]

    def unsigned(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, 0)

    def negate(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.phase + 2)

    def with_sign(self, sign: int) -> "PauliString":
        return PauliString(self.n, self.x, self.z, 0 if sign > 0 else 2)

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Restriction onto ``qubits`` (re-indexed in the given order), phase kept."""
        x = z = 0
        for k, q in enumerate(qubits):
            x |= ((self.x >> q) & 1) << k
            z |= ((self.z >> q) & 1) << k
        return PauliString(len(qubits), x, z, self.phase)

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliString":
        """Place this string on ``qubits`` of a larger ``n``-qubit register."""
        x = z = 0
        for k, q in enumerate(qubits):
            x |= ((self.x >> k) & 1) << q
            z |= ((self.z >> k) & 1) << q
        return PauliString(n, x, z, self.phase)

    def to_literal(self) -> str:
        if self.phase == 1 or self.phase == 3:
            prefix = "+i" if self.phase == 1 else "-i"
        else:
            prefix = "-" if self.phase == 2 else "+"
        return prefix + "".join(self.char(k) for k in range(self.n))

    # -- algebra ----------------------------------------------------------
    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n, self.x, self.z, self.phase) == (other.n, other.x, other.z, other.phase)

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z, self.phase))

    def __repr__(self) -> str:
        return f"PauliString({self.to_literal()!r})"

    __str__ = to_literal


def _check_dims(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a * b`` including phase."""
    _check_dims(a, b)
    phase = a.phase + b.phase + product_phase(a.x, a.z, b.x, b.z)
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_dims(a, b)
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() % 2 == 0


def _anticommutes_raw(x1: int, z1: int, x2: int, z2: int) -> bool:
    return bool(((x1 & z2) ^ (z1 & x2)).bit_count() & 1)


# -- echelon machinery ------------------------------------------------------
# Rows are keyed on the combined integer ``x | z << n``; the pivot of a row is
# its highest set bit.  Every stored row is an exact signed product of
# generators, so reducing a target by the rows keeps full phase information.


class Echelon:
    """Row-reduced basis of a commuting group, with exact product phases."""

    __slots__ = ("n", "rows")

    def __init__(self, n: int, generators: Iterable[PauliString] = ()):
        self.n = n
        self.rows: dict[int, PauliString] = {}
        for g in generators:
            self.insert(g)

    def _key(self, p: PauliString) -> int:
        return p.x | (p.z << self.n)

    def reduce(self, p: PauliString) -> PauliString:
        """Multiply ``p`` by echelon rows until its top bit is not a pivot."""
        n = self.n
        x, z, phase = p.x, p.z, p.phase
        rows = self.rows
        while True:
            key = x | (z << n)
            if not key:
                break
            row = rows.get(key.bit_length() - 1)
            if row is None:
                break
            phase += row.phase + product_phase(x, z, row.x, row.z)
            x ^= row.x
            z ^= row.z
        return PauliString(n, x, z, phase)

    def insert(self, p: PauliString) -> bool:
        r = self.reduce(p)
        if r.is_identity():
            return False
        self.rows[self._key(r).bit_length() - 1] = r
        return True

    def __len__(self) -> int:
        return len(self.rows)


class GeneratorSet:
    """Ordered, independent, pairwise-commuting Hermitian generators.

    Immutable after construction.  The echelon form used for membership
    queries is built lazily and cached.
    """

    __slots__ = ("n", "generators", "_echelon")

    def __init__(self, n: int, generators: Iterable[PauliString] = (), *, check: bool = True):
        self.n = n
        self.generators: tuple[PauliString, ...] = tuple(generators)
        self._echelon: Optional[Echelon] = None
        if check:
            self.validate()

    @classmethod
    def from_literals(cls, literals: Iterable[str]) -> "GeneratorSet":
        gens = [PauliString.from_literal(s) for s in literals]
        if not gens:
            raise ValueError("need at least one literal to infer n")
        return cls(gens[0].n, gens)

    @classmethod
    def computational(cls, n: int, bits: Sequence[int] | None = None) -> "GeneratorSet":
        bits = bits or [0] * n
        return cls(n, [PauliString.single(n, q, "Z", -1 if b else 1) for q, b in enumerate(bits)], check=False)

    def validate(self) -> None:
        gens = self.generators
        for g in gens:
            if g.n != self.n:
                raise DimensionError("generator size mismatch")
            if not g.is_hermitian:
                raise ValueError(f"non-Hermitian generator {g}")
        for i, g in enumerate(gens):
            for h in gens[i + 1:]:
                if _anticommutes_raw(g.x, g.z, h.x, h.z):
                    raise ValueError(f"generators {g} and {h} anticommute")
        ech = Echelon(self.n)
        for g in gens:
            if not ech.insert(g):
                raise ValueError(f"generator {g} is dependent on earlier ones")
        self._echelon = ech

    @property
    def echelon(self) -> Echelon:
        if self._echelon is None:
            self._echelon = Echelon(self.n, self.generators)
        return self._echelon

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __getitem__(self, i: int) -> PauliString:
        return self.generators[i]

    def __repr__(self) -> str:
        return f"GeneratorSet({[g.to_literal() for g in self.generators]})"

    def to_literals(self) -> list[str]:
        return [g.to_literal() for g in self.generators]


def membership(gens: GeneratorSet, p: PauliString) -> Optional[int]:
    """Return ``s`` with ``s * p`` in the group, or ``None`` if ``±p`` is not in it.

    ``+1`` means ``p`` itself is a group element, ``-1`` means ``-p`` is.
    """
    if p.n != gens.n:
        raise DimensionError(f"qubit counts differ: {p.n} vs {gens.n}")
    if not p.is_hermitian:
        raise ValueError("membership is only defined for Hermitian Paulis")
    r = gens.echelon.reduce(p)
    if not r.is_identity():
        return None
    # p * (product of rows) = i^phase * I, rows commute and square to I
    return 1 if r.phase == 0 else -1


def group_intersection_size(a: GeneratorSet, b: GeneratorSet) -> tuple[int, bool]:
    """Size of the signed intersection of two stabilizer groups.

    Returns ``(count, contradiction)``.  ``contradiction`` is True when some
    Pauli lies in both groups up to sign but with opposite signs, i.e. when
    ``-1`` is in the product set; the trace overlap of the two states is then
    zero.  Otherwise ``count`` is the number of common signed elements and
    ``tr[rho_a rho_b] = count / 2**n``.
    """
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")
    n2 = 2 * a.n
    # Zassenhaus: rows (v | v) for a, (v | 0) for b; rows with empty left
    # half after reduction span the unsigned intersection.
    rows: dict[int, int] = {}

    def insert(v: int) -> None:
        while v:
            top = v.bit_length() - 1
            r = rows.get(top)
            if r is None:
                rows[top] = v
                return
            v ^= r

    for g in a.generators:
        key = g.x | (g.z << a.n)
        insert((key << n2) | key)
    for g in b.generators:
        key = g.x | (g.z << a.n)
        insert(key << n2)
    mask = (1 << a.n) - 1
    basis = [v for top, v in rows.items() if top < n2]
    contradiction = False
    for v in basis:
        p = PauliString(a.n, v & mask, (v >> a.n) & mask, 0)
        sa = membership(a, p)
        sb = membership(b, p)
        if sa is None or sb is None:  # pragma: no cover - guarded by construction
            raise RuntimeError("intersection basis element not in both groups")
        if sa != sb:
            contradiction = True
    return 1 << len(basis), contradiction
