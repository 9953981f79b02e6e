"""Mixed-state stabilizer simulation on generator lists.

A state on ``n`` qubits is held as ``d <= n`` independent commuting signed
Pauli generators; the density matrix is ``2**-n * sum_{g in S} g``.  There
are no destabilizer rows: measurements and channels only need commutation
checks plus membership queries, which reuse a lazily built echelon form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .clifford import CliffordGate, apply_to_pauli
from .pauli import (
    Echelon,
    GeneratorSet,
    PauliString,
    product_phase,
)

__all__ = ["MixedStabilizerState", "MeasurementOutcome", "BitStream"]


class BitStream:
    """Deterministic source of single random bits, one per random branch."""

    __slots__ = ("_rng", "_word", "_left", "consumed")

    def __init__(self, seed_or_rng):
        if isinstance(seed_or_rng, np.random.Generator):
            self._rng = seed_or_rng
        else:
            self._rng = np.random.Generator(np.random.PCG64(seed_or_rng))
        self._word = 0
        self._left = 0
        self.consumed = 0

    def next_bit(self) -> int:
        if self._left == 0:
            self._word = int(self._rng.integers(0, 2**63, dtype=np.int64))
            self._left = 63
        bit = self._word & 1
        self._word >>= 1
        self._left -= 1
        self.consumed += 1
        return bit


@dataclass(frozen=True)
class MeasurementOutcome:
    bit: int
    deterministic: bool


class MixedStabilizerState:
    """Mutable stabilizer state owned by a single simulation context."""

    def __init__(self, group: GeneratorSet, rng=None):
        self.n = group.n
        self._gens: list[PauliString] = list(group.generators)
        self._echelon: Optional[Echelon] = None
        self.rng_tap = rng if isinstance(rng, BitStream) or rng is None else BitStream(rng)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int, rng=None) -> "MixedStabilizerState":
        return cls(GeneratorSet.computational(n), rng)

    @classmethod
    def plus(cls, n: int, rng=None) -> "MixedStabilizerState":
        return cls(GeneratorSet(n, [PauliString.single(n, q, "X") for q in range(n)], check=False), rng)

    @classmethod
    def maximally_mixed(cls, n: int, rng=None) -> "MixedStabilizerState":
        return cls(GeneratorSet(n, (), check=False), rng)

    def copy(self) -> "MixedStabilizerState":
        new = MixedStabilizerState.__new__(MixedStabilizerState)
        new.n = self.n
        new._gens = list(self._gens)
        new._echelon = self._echelon
        new.rng_tap = self.rng_tap
        return new

    # -- views ------------------------------------------------------------
    @property
    def d(self) -> int:
        return len(self._gens)

    @property
    def is_pure(self) -> bool:
        return len(self._gens) == self.n

    @property
    def group(self) -> GeneratorSet:
        return GeneratorSet(self.n, self._gens, check=False)

    @property
    def generators(self) -> tuple[PauliString, ...]:
        return tuple(self._gens)

    def dump(self) -> str:
        return "\n".join(g.to_literal() for g in self._gens)

    def _ech(self) -> Echelon:
        if self._echelon is None:
            self._echelon = Echelon(self.n, self._gens)
        return self._echelon

    def _mutated(self) -> None:
        self._echelon = None

    def membership(self, p: PauliString) -> Optional[int]:
        r = self._ech().reduce(p)
        if r.x or r.z:
            return None
        return 1 if r.phase == 0 else -1

    # -- unitary evolution ------------------------------------------------
    def apply_gate(self, gate: CliffordGate) -> "MixedStabilizerState":
        for q in gate.support:
            if not 0 <= q < self.n:
                raise IndexError(f"gate qubit {q} outside [0, {self.n})")
        self._apply_index(gate.index, gate.support)
        return self

    def _apply_index(self, index: int, support: Sequence[int]) -> None:
        mask = 0
        for q in support:
            mask |= 1 << q
        gens = self._gens
        for i, g in enumerate(gens):
            if (g.x | g.z) & mask:
                gens[i] = apply_to_pauli(g, index, support)
        self._echelon = None

    # -- measurement ------------------------------------------------------
    def _anticommuting(self, p: PauliString) -> list[int]:
        px, pz = p.x, p.z
        return [
            i for i, g in enumerate(self._gens)
            if ((g.x & pz) ^ (g.z & px)).bit_count() & 1
        ]

    def branch_type(self, p: PauliString) -> str:
        """'a' (deterministic), 'b' (anticommutes) or 'c' (commutes, not in group)."""
        if self._anticommuting(p):
            return "b"
        return "a" if self.membership(p) is not None else "c"

    def measure(self, p: PauliString, forced: Optional[int] = None) -> MeasurementOutcome:
        """Projective measurement of the Hermitian Pauli ``p``.

        Random outcomes draw one bit from ``rng_tap`` unless ``forced`` is
        given, in which case the forced bit is used for random branches and
        ignored for deterministic ones (the caller compares).
        """
        if p.n != self.n:
            raise ValueError("dimension mismatch")
        if not p.is_hermitian:
            raise ValueError("cannot measure a non-Hermitian Pauli")
        anti = self._anticommuting(p)
        if not anti:
            s = self.membership(p)
            if s is not None:
                # s * p in S; eigenvalue of p is s
                return MeasurementOutcome(0 if s == 1 else 1, True)
        bit = forced if forced is not None else self.rng_tap.next_bit()
        # post-measurement generator is (-1)**bit * p
        new = PauliString(p.n, p.x, p.z, p.phase + 2 * bit)
        gens = self._gens
        if anti:
            k = anti[0]
            pivot = gens[k]
            for i in anti[1:]:
                g = gens[i]
                gens[i] = PauliString(
                    self.n, g.x ^ pivot.x, g.z ^ pivot.z,
                    g.phase + pivot.phase + product_phase(g.x, g.z, pivot.x, pivot.z),
                )
            gens[k] = new
        else:
            gens.append(new)
        self._echelon = None
        return MeasurementOutcome(bit, False)

    # -- channels ---------------------------------------------------------
    def dephase(self, p: PauliString) -> "MixedStabilizerState":
        """Apply rho -> (rho + p rho p) / 2 by dropping anticommuting directions."""
        anti = self._anticommuting(p)
        if not anti:
            return self
        gens = self._gens
        k = anti[0]
        pivot = gens[k]
        for i in anti[1:]:
            g = gens[i]
            gens[i] = PauliString(
                self.n, g.x ^ pivot.x, g.z ^ pivot.z,
                g.phase + pivot.phase + product_phase(g.x, g.z, pivot.x, pivot.z),
            )
        del gens[k]
        self._echelon = None
        return self

    def erase(self, qubit: int) -> "MixedStabilizerState":
        if not 0 <= qubit < self.n:
            raise IndexError(f"qubit {qubit} outside [0, {self.n})")
        self.dephase(PauliString.single(self.n, qubit, "Z"))
        self.dephase(PauliString.single(self.n, qubit, "X"))
        return self

    # -- partial trace ----------------------------------------------------
    def reduced_group(self, region: Iterable[int]) -> GeneratorSet:
        """Stabilizer group of the reduced state on ``region`` (re-indexed in order)."""
        return reduced_group(self.group, region)

    def density_matrix(self) -> np.ndarray:
        from .dense import density_from_generators

        return density_from_generators(self.group)


def reduced_group(group: GeneratorSet, region: Iterable[int]) -> GeneratorSet:
    """Generators of ``{g in S : supp(g) ⊆ region}`` restricted to ``region``."""
    region = list(region)
    n = group.n
    inside = 0
    for q in region:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} outside [0, {n})")
        inside |= 1 << q
    outside = ((1 << n) - 1) & ~inside
    # Eliminate with pivots on outside columns first: key puts outside bits high.
    rows: dict[int, PauliString] = {}
    kept: list[PauliString] = []
    n_in = len(region)

    def key(p: PauliString) -> int:
        out = (p.x & outside) | ((p.z & outside) << n)
        return out

    for g in group.generators:
        x, z, phase = g.x, g.z, g.phase
        while True:
            k = (x & outside) | ((z & outside) << n)
            if not k:
                break
            row = rows.get(k.bit_length() - 1)
            if row is None:
                break
            phase += row.phase + product_phase(x, z, row.x, row.z)
            x ^= row.x
            z ^= row.z
        r = PauliString(n, x, z, phase)
        k = key(r)
        if k:
            rows[k.bit_length() - 1] = r
        else:
            kept.append(r)
    restricted = [g.restrict(region) for g in kept]
    return GeneratorSet(n_in, restricted, check=False)
