"""Random monitored Clifford circuit ensembles and erasure-noise injection.

A circuit is a flat, totally ordered event list held in parallel numpy
arrays.  Event kinds:

    GATE2   two-qubit Clifford on (q0, q1), ``gate`` indexes the group table
    MEASURE single-qubit Z measurement on q0
    ERASE   replace q0 with the maximally mixed state
    GATE1   single-qubit Clifford on q0 (only produced by gate decomposition)

Each layer ``t`` runs its gates, then its measurements, then its erasures.
The first ``t_encoding`` layers carry no measurements.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from .clifford import CliffordGate, N_TWO_QUBIT

__all__ = [
    "GATE2",
    "MEASURE",
    "ERASE",
    "GATE1",
    "CircuitSpec",
    "NoisySpec",
    "Circuit",
    "build_circuit",
    "inject_noise",
    "derive_seed",
    "splitmix64",
    "make_rng",
]

GATE2, MEASURE, ERASE, GATE1 = 0, 1, 2, 3
CHAIN_1D = "chain1d"
ALL_TO_ALL = "alltoall"
_CONNECTIVITY_ALIASES = {
    "chain1d": CHAIN_1D, "1d": CHAIN_1D, "chain": CHAIN_1D,
    "alltoall": ALL_TO_ALL, "a2a": ALL_TO_ALL, "all-to-all": ALL_TO_ALL,
}

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(*keys: int) -> int:
    """Fold integer keys into a 64-bit seed: h = splitmix64(h ^ key) per key."""
    h = 0x6D697074  # arbitrary nonzero start
    for k in keys:
        h = splitmix64(h ^ (int(k) & _MASK64))
    return h


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def normalize_connectivity(name: str) -> str:
    try:
        return _CONNECTIVITY_ALIASES[name.lower().replace("_", "")]
    except KeyError:
        raise ValueError(f"unknown connectivity {name!r}") from None


def _n_layers(ratio, L: int) -> int:
    # round half up so that e.g. ratio 1/2 on L=2 gives one layer
    return int(Fraction(ratio).limit_denominator(10**6) * L + Fraction(1, 2))


@dataclass(frozen=True)
class CircuitSpec:
    L: int
    connectivity: str = CHAIN_1D
    p: float = 0.0
    encoding_ratio: float = 3
    bulk_ratio: float = 3
    seed: int = 0
    periodic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "connectivity", normalize_connectivity(self.connectivity))
        if self.L < 2 or self.L % 2:
            raise ValueError(f"L must be a positive even integer, got {self.L}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.encoding_ratio < 0 or self.bulk_ratio < 0:
            raise ValueError("stage ratios must be non-negative")

    @property
    def t_encoding(self) -> int:
        return _n_layers(self.encoding_ratio, self.L)

    @property
    def t_bulk(self) -> int:
        return _n_layers(self.bulk_ratio, self.L)

    def with_seed(self, seed: int) -> "CircuitSpec":
        return CircuitSpec(self.L, self.connectivity, self.p, self.encoding_ratio,
                           self.bulk_ratio, seed, self.periodic)


@dataclass(frozen=True)
class NoisySpec:
    q: float
    base: Optional[CircuitSpec] = None

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {self.q}")


@dataclass(frozen=True, eq=False)
class Circuit:
    """Immutable event list.  Arrays are read-only views."""

    L: int
    kind: np.ndarray
    layer: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    gate: np.ndarray
    stage_boundary: int
    n_layers: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("kind", "layer", "q0", "q1", "gate"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64 if name != "kind" else np.int8)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.kind)
        if not all(len(getattr(self, a)) == n for a in ("layer", "q0", "q1", "gate")):
            raise ValueError("event arrays differ in length")

    # -- summaries ----------------------------------------------------------
    def __len__(self) -> int:
        return len(self.kind)

    @property
    def n_measurements(self) -> int:
        return int(np.count_nonzero(self.kind == MEASURE))

    @property
    def n_erasures(self) -> int:
        return int(np.count_nonzero(self.kind == ERASE))

    @property
    def n_gates(self) -> int:
        return int(np.count_nonzero(self.kind == GATE2))

    @property
    def is_noisy(self) -> bool:
        return self.n_erasures > 0

    def measured_qubits(self) -> np.ndarray:
        return self.q0[self.kind == MEASURE]

    def events(self) -> Iterator[tuple]:
        """Yield ('G', t, gate) / ('U', t, gate) / ('M', t, q) / ('E', t, q)."""
        for k, t, a, b, g in zip(self.kind, self.layer, self.q0, self.q1, self.gate):
            if k == GATE2:
                yield ("G", int(t), CliffordGate((int(a), int(b)), int(g)))
            elif k == GATE1:
                yield ("U", int(t), CliffordGate((int(a),), int(g)))
            elif k == MEASURE:
                yield ("M", int(t), int(a))
            else:
                yield ("E", int(t), int(a))

    def without_noise(self) -> "Circuit":
        keep = self.kind != ERASE
        boundary = int(np.count_nonzero(keep[: self.stage_boundary]))
        return Circuit(self.L, self.kind[keep], self.layer[keep], self.q0[keep], self.q1[keep],
                       self.gate[keep], boundary, self.n_layers, dict(self.meta))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.L == other.L
            and self.stage_boundary == other.stage_boundary
            and all(np.array_equal(getattr(self, a), getattr(other, a))
                    for a in ("kind", "layer", "q0", "q1", "gate"))
        )

    def __hash__(self):
        return hash((self.L, self.stage_boundary, self.kind.tobytes(), self.q0.tobytes(), self.gate.tobytes()))

    # -- text format ----------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"L={self.L} stage_boundary={self.stage_boundary}"]
        for ev in self.events():
            tag, t, obj = ev
            if tag == "G":
                lines.append(f"G {t} {obj.support[0]} {obj.support[1]} {obj.to_literal()}")
            elif tag == "U":
                lines.append(f"U {t} {obj.support[0]} {obj.to_literal()}")
            else:
                lines.append(f"{tag} {t} {obj}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows:
            raise ValueError("empty circuit text")
        header = dict(tok.split("=", 1) for tok in rows[0])
        try:
            L = int(header["L"])
            boundary = int(header["stage_boundary"])
        except (KeyError, ValueError):
            raise ValueError(f"bad circuit header {' '.join(rows[0])!r}") from None
        kind, layer, q0, q1, gate = [], [], [], [], []
        for tok in rows[1:]:
            tag = tok[0]
            t = int(tok[1])
            if tag == "G":
                g = CliffordGate.from_literal((int(tok[2]), int(tok[3])), tok[4])
                kind.append(GATE2); q0.append(g.support[0]); q1.append(g.support[1]); gate.append(g.index)
            elif tag == "U":
                g = CliffordGate.from_literal((int(tok[2]),), tok[3])
                kind.append(GATE1); q0.append(g.support[0]); q1.append(-1); gate.append(g.index)
            elif tag in ("M", "E"):
                kind.append(MEASURE if tag == "M" else ERASE); q0.append(int(tok[2])); q1.append(-1); gate.append(-1)
            else:
                raise ValueError(f"unknown event tag {tag!r}")
            layer.append(t)
        if any(not 0 <= q < L for q in q0) or any(q >= L for q in q1):
            raise ValueError("event qubit out of range")
        n_layers = max(layer) + 1 if layer else 0
        return cls(L, np.array(kind, np.int8), np.array(layer), np.array(q0), np.array(q1),
                   np.array(gate), boundary, n_layers)


def _layer_pairs(spec: CircuitSpec, t: int, rng: np.random.Generator) -> np.ndarray:
    L = spec.L
    if spec.connectivity == ALL_TO_ALL:
        perm = rng.permutation(L)
        return perm.reshape(-1, 2)
    if t % 2 == 0:
        a = np.arange(0, L, 2)
        return np.stack([a, a + 1], axis=1)
    a = np.arange(1, L - 1, 2)
    pairs = np.stack([a, a + 1], axis=1)
    if spec.periodic:
        pairs = np.vstack([pairs, [[L - 1, 0]]])
    return pairs


def build_circuit(spec: CircuitSpec) -> Circuit:
    """Deterministic function of ``spec`` (including its seed)."""
    rng = make_rng(spec.seed)
    L = spec.L
    t_enc, t_bulk = spec.t_encoding, spec.t_bulk
    kinds, layers, q0s, q1s, gates = [], [], [], [], []
    boundary = 0
    for t in range(t_enc + t_bulk):
        pairs = _layer_pairs(spec, t, rng)
        g = rng.integers(0, N_TWO_QUBIT, size=len(pairs))
        n = len(pairs)
        kinds.append(np.full(n, GATE2, np.int8)); layers.append(np.full(n, t))
        q0s.append(pairs[:, 0]); q1s.append(pairs[:, 1]); gates.append(g)
        if t < t_enc:
            continue
        if t == t_enc:
            boundary = sum(len(k) for k in kinds) - n
        hit = np.flatnonzero(rng.random(L) < spec.p)
        m = len(hit)
        kinds.append(np.full(m, MEASURE, np.int8)); layers.append(np.full(m, t))
        q0s.append(hit); q1s.append(np.full(m, -1)); gates.append(np.full(m, -1))
    if t_bulk == 0:
        boundary = sum(len(k) for k in kinds)
    cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
    return Circuit(
        L, cat(kinds, np.int8), cat(layers, np.int64), cat(q0s, np.int64), cat(q1s, np.int64),
        cat(gates, np.int64), boundary, t_enc + t_bulk,
        {"spec": spec},
    )


def inject_noise(c: Circuit, noisy: NoisySpec | float, rng: np.random.Generator) -> Circuit:
    """Insert erasures at (qubit, layer) locations independently with probability q."""
    q = noisy.q if isinstance(noisy, NoisySpec) else float(noisy)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if q == 0.0 or len(c) == 0:
        return c
    n_layers = c.n_layers or int(c.layer.max()) + 1
    hits = rng.random((n_layers, c.L)) < q
    if not hits.any():
        return c
    # end position of each layer in the event list
    ends = np.searchsorted(c.layer, np.arange(n_layers), side="right")
    kinds, layers, q0s, q1s, gates = [], [], [], [], []
    start = 0
    boundary = c.stage_boundary
    for t in range(n_layers):
        end = int(ends[t])
        sl = slice(start, end)
        kinds.append(c.kind[sl]); layers.append(c.layer[sl]); q0s.append(c.q0[sl])
        q1s.append(c.q1[sl]); gates.append(c.gate[sl])
        er = np.flatnonzero(hits[t])
        m = len(er)
        if m:
            kinds.append(np.full(m, ERASE, np.int8)); layers.append(np.full(m, t)); q0s.append(er)
            q1s.append(np.full(m, -1)); gates.append(np.full(m, -1))
            if end <= c.stage_boundary:
                boundary += m
        start = end
    return Circuit(
        c.L, np.concatenate(kinds), np.concatenate(layers), np.concatenate(q0s),
        np.concatenate(q1s), np.concatenate(gates), boundary, n_layers, dict(c.meta, q=q),
    )
