"""Stabilizer initial states for the XEB protocol."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .clifford import N_ONE_QUBIT, CliffordGate, named_gate, sample_two_qubit_clifford
from .pauli import GeneratorSet, PauliString, membership
from .stabilizer import MixedStabilizerState

__all__ = ["InitialState", "random_stabilizer_group"]

_KINDS = ("zero", "mixed", "plus", "custom")
_ALIASES = {
    "zero": "zero", "allzero": "zero", "all_zero": "zero", "0": "zero",
    "mixed": "mixed", "maximallymixed": "mixed", "maximally_mixed": "mixed", "maxmixed": "mixed",
    "plus": "plus", "plusall": "plus", "plus_all": "plus", "+": "plus",
}


@dataclass(frozen=True)
class InitialState:
    """AllZero, MaximallyMixed, PlusAll or a custom stabilizer group."""

    kind: str
    group: Optional[GeneratorSet] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown initial state kind {self.kind!r}")
        if self.kind == "custom" and self.group is None:
            raise ValueError("custom initial state needs a generator set")

    @classmethod
    def zero(cls) -> "InitialState":
        return cls("zero")

    @classmethod
    def mixed(cls) -> "InitialState":
        return cls("mixed")

    @classmethod
    def plus(cls) -> "InitialState":
        return cls("plus")

    @classmethod
    def custom(cls, group: GeneratorSet) -> "InitialState":
        group.validate()
        return cls("custom", group)

    @classmethod
    def from_name(cls, name: str) -> "InitialState":
        key = name.strip().lower()
        if key not in _ALIASES:
            raise ValueError(f"unknown initial state {name!r}")
        return cls(_ALIASES[key])

    @property
    def name(self) -> str:
        return self.kind

    def group_for(self, L: int) -> GeneratorSet:
        if self.kind == "zero":
            return GeneratorSet.computational(L)
        if self.kind == "plus":
            return GeneratorSet(L, [PauliString.single(L, q, "X") for q in range(L)], check=False)
        if self.kind == "mixed":
            return GeneratorSet(L, (), check=False)
        if self.group.n != L:
            raise ValueError(f"custom state acts on {self.group.n} qubits, circuit has {L}")
        return self.group

    def is_contained_in(self, other: "InitialState", L: int) -> bool:
        """True when every element of this group is a (signed) element of ``other``'s.

        Then ``other`` is one component of a uniform mixture equal to this
        state, so its record support sits inside this state's support.
        """
        if self.kind == "mixed":
            return True
        mine = self.group_for(L)
        theirs = other.group_for(L)
        return all(membership(theirs, g) == 1 for g in mine)


def random_stabilizer_group(rng, n: int, d: Optional[int] = None) -> GeneratorSet:
    """Random signed stabilizer group on ``n`` qubits with ``d`` generators (default pure).

    Random X flips set the signs, a random Clifford circuit of depth ``4n + 2``
    scrambles, then a random subset of ``d`` generators is kept.
    """
    st = MixedStabilizerState.zero(n)
    x = named_gate("X", 0).index
    for q in range(n):
        if rng.random() < 0.5:
            st.apply_gate(CliffordGate((q,), x))
    for _ in range(4 * n + 2):
        if n >= 2 and rng.random() < 0.7:
            a, b = rng.choice(n, 2, replace=False)
            st.apply_gate(sample_two_qubit_clifford(rng, (int(a), int(b))))
        else:
            st.apply_gate(CliffordGate((int(rng.integers(n)),), int(rng.integers(N_ONE_QUBIT))))
    if d is not None and d < n:
        gens = list(st.generators)
        order = rng.permutation(n)
        return GeneratorSet(n, [gens[i] for i in order[:d]])
    return st.group
