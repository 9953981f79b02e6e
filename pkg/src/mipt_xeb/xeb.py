"""Linear cross entropy: sampling estimator, exact evaluation, inequality audits.

For a noisy circuit ``C'`` run on ``rho`` and its clean skeleton ``C`` run
on ``sigma``

    chi = sum_m p'_rho(m) p_sigma(m) / sum_m p_sigma(m)**2.

For stabilizer ``sigma`` the record distribution is uniform on its support,
so ``chi`` is the probability that a record drawn from ``rho`` could occur
on ``sigma``.  The sampling estimator draws records and replays them.

Three exact routes are provided and cross-checked in the tests:

``register``  joint state on system plus one register qubit per measurement,
              reduced to the register, trace overlap via group intersection.
``affine``    compiled tableau with symbolic signs; both supports are affine
              subspaces of F2^N and chi is a ratio of subspace sizes.
``count``     when ``rho``'s group is contained in ``sigma``'s and noise only
              acts on the ``rho`` side, the ``sigma`` support lies inside the
              ``rho`` support and chi = 2**(N_sigma - N_rho) in terms of
              random-branch counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .circuits import ERASE, GATE1, GATE2, MEASURE, Circuit, derive_seed, make_rng
from .clifford import CliffordGate, named_gate
from .engine import RecordMap, count_random, record_map
from .pauli import GeneratorSet, PauliString, group_intersection_size
from .stabilizer import BitStream, MixedStabilizerState
from .states import InitialState

__all__ = [
    "MeasurementRecord",
    "ChiEstimate",
    "InitialState",
    "sample_record",
    "replay_indicator",
    "shot_statistics",
    "estimate_chi",
    "aggregate",
    "exact_chi",
    "affine_chi",
    "check_inequality",
    "InequalityReport",
    "StatisticsError",
]


class StatisticsError(ValueError):
    """Too few samples for the requested statistic."""


@dataclass(frozen=True)
class MeasurementRecord:
    bits: tuple
    circuit_id: int = 0
    shot_id: int = 0

    def __len__(self) -> int:
        return len(self.bits)


@dataclass
class ChiEstimate:
    per_circuit: list
    chi_bar: float
    eps: float
    ci95: tuple
    between_circuit_se: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "chi_bar": self.chi_bar, "eps": self.eps, "ci95": list(self.ci95),
            "between_circuit_se": None if math.isnan(self.between_circuit_se) else self.between_circuit_se,
        }


# -- trajectory simulation on the generator-list engine ------------------------------

def _initial(state: InitialState, L: int, rng=None) -> MixedStabilizerState:
    return MixedStabilizerState(state.group_for(L), rng)


def _run(c: Circuit, st: MixedStabilizerState, forced=None):
    """Yield outcomes in order; with ``forced`` stop at the first contradiction."""
    L = c.L
    j = 0
    bits = []
    for k, a, b, g in zip(c.kind, c.q0, c.q1, c.gate):
        if k == GATE2:
            st._apply_index(int(g), (int(a), int(b)))
        elif k == GATE1:
            st._apply_index(int(g), (int(a),))
        elif k == ERASE:
            st.erase(int(a))
        else:
            p = PauliString.single(L, int(a), "Z")
            if forced is None:
                bits.append(st.measure(p).bit)
            else:
                want = int(forced[j])
                out = st.measure(p, forced=want)
                if out.deterministic and out.bit != want:
                    return None
                bits.append(want)
            j += 1
    return bits


def sample_record(noisy: Circuit, rho: InitialState, rng, circuit_id: int = 0,
                  shot_id: int = 0) -> MeasurementRecord:
    """One trajectory of ``noisy`` on ``rho``; one random bit per random branch."""
    stream = rng if isinstance(rng, BitStream) else BitStream(rng)
    st = _initial(rho, noisy.L, stream)
    return MeasurementRecord(tuple(_run(noisy, st)), circuit_id, shot_id)


def replay_indicator(clean: Circuit, sigma: InitialState, rec: MeasurementRecord | Sequence[int]) -> int:
    """1 if the record can occur when ``clean`` runs on ``sigma``, else 0."""
    bits = rec.bits if isinstance(rec, MeasurementRecord) else tuple(rec)
    if len(bits) != clean.n_measurements:
        raise ValueError(f"record has {len(bits)} bits, circuit has {clean.n_measurements} measurements")
    if clean.is_noisy:
        raise ValueError("replay uses the clean circuit")
    st = _initial(sigma, clean.L)
    return 0 if _run(clean, st, forced=bits) is None else 1


# -- statistics --------------------------------------------------------------------------------

def shot_statistics(indicators) -> tuple[float, float]:
    """(mean, standard error) with the unbiased (M - 1) variance."""
    x = np.asarray(indicators, dtype=float)
    M = len(x)
    if M < 2:
        raise StatisticsError("need at least two shots for a standard error")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(M))


def aggregate(per_circuit) -> ChiEstimate:
    """chi_bar = mean chi_i, eps**2 = mean eps_i**2, ci95 = chi_bar +- 1.96 eps."""
    pc = [(float(a), float(b)) for a, b in per_circuit]
    if not pc:
        raise StatisticsError("no circuits to aggregate")
    chis = np.array([a for a, _ in pc])
    epss = np.array([b for _, b in pc])
    chi_bar = float(chis.mean())
    eps = float(math.sqrt(np.mean(epss ** 2)))
    se = float(chis.std(ddof=1) / math.sqrt(len(chis))) if len(chis) > 1 else float("nan")
    return ChiEstimate(pc, chi_bar, eps, (chi_bar - 1.96 * eps, chi_bar + 1.96 * eps), se)


def estimate_chi(noisy: Circuit, clean: Circuit, rho: InitialState, sigma: InitialState,
                 shots: int, rng, method: str = "affine") -> tuple[float, float]:
    """Per-circuit (chi_i, eps_i) from ``shots`` sampled records.

    ``method="trajectory"`` simulates every shot on the generator-list engine;
    ``"affine"`` compiles both circuits once and samples records from the
    affine support description (same distribution, far cheaper per shot).
    """
    if shots < 2:
        raise StatisticsError("need at least two shots per circuit")
    if noisy.n_measurements != clean.n_measurements:
        raise ValueError("noisy and clean circuits have different measurement counts")
    x = np.empty(shots, dtype=np.uint8)
    if method == "trajectory":
        stream = rng if isinstance(rng, BitStream) else BitStream(rng)
        for s in range(shots):
            rec = sample_record(noisy, rho, stream, shot_id=s)
            x[s] = replay_indicator(clean, sigma, rec)
    elif method == "affine":
        rm_rho = record_map(noisy, rho)
        checks = record_map(clean, sigma).constraints()
        stream = rng if isinstance(rng, BitStream) else BitStream(rng)
        gen = iter(stream.next_bit, None)
        for s in range(shots):
            rec = _pack(rm_rho.sample(gen))
            x[s] = all((c & rec).bit_count() % 2 == 0 for c in checks)
    else:
        raise ValueError(f"unknown method {method!r}")
    return shot_statistics(x)


def _pack(bits) -> int:
    rec = 1
    for j, b in enumerate(bits):
        if b:
            rec |= 1 << (j + 1)
    return rec


# -- exact evaluation ------------------------------------------------------------------------

def _register_group(c: Circuit, state: InitialState) -> GeneratorSet:
    """Reduced stabilizer group on the measurement register."""
    L, N = c.L, c.n_measurements
    n = L + N
    gens = [g.embed(n, range(L)) for g in state.group_for(L)]
    gens += [PauliString.single(n, L + j, "Z") for j in range(N)]
    st = MixedStabilizerState(GeneratorSet(n, gens, check=False))
    j = 0
    for k, a, b, g in zip(c.kind, c.q0, c.q1, c.gate):
        if k == GATE2:
            st._apply_index(int(g), (int(a), int(b)))
        elif k == GATE1:
            st._apply_index(int(g), (int(a),))
        elif k == ERASE:
            st.erase(int(a))
        else:
            r = L + j
            st._apply_index(named_gate("CNOT", 0, 1).index, (int(a), r))
            st.dephase(PauliString.single(n, r, "Z"))
            j += 1
    return st.reduced_group(range(L, n))


def affine_chi(rm_rho: RecordMap, rm_sigma: RecordMap) -> Fraction:
    """|supp_rho ∩ supp_sigma| / |supp_rho| for affine supports."""
    if rm_rho.n != rm_sigma.n:
        raise ValueError("record lengths differ")
    det = [j for j in range(rm_rho.n) if not rm_rho.is_random[j]]
    det_mask = 0
    for j in det:
        det_mask |= 1 << (j + 1)
    rows: dict[int, int] = {}
    rank = 0
    for c in rm_sigma.constraints():
        # substitute rho's deterministic outcomes by their affine forms
        v = c & ~det_mask
        rest = c & det_mask
        while rest:
            low = rest & -rest
            j = low.bit_length() - 2
            v ^= rm_rho.forms[j]
            rest ^= low
        while v > 1:
            top = v.bit_length() - 1
            r = rows.get(top)
            if r is None:
                rows[top] = v
                rank += 1
                break
            v ^= r
        else:
            if v == 1:
                return Fraction(0)
    return Fraction(1, 1 << rank)


def _dominated(noisy: Circuit, clean: Circuit, rho: InitialState, sigma: InitialState) -> bool:
    if noisy.without_noise() != clean:
        return False
    return rho.is_contained_in(sigma, clean.L)


def exact_chi(noisy: Circuit, clean: Circuit, rho: InitialState, sigma: InitialState,
              method: str = "auto") -> Fraction:
    """Exact cross entropy as a rational number.

    ``method`` is one of ``auto``, ``register``, ``affine``, ``count``.  The
    empty record (no measurements) gives 1.
    """
    if not isinstance(rho, InitialState) or not isinstance(sigma, InitialState):
        raise TypeError("rho and sigma must be stabilizer InitialState values")
    if clean.is_noisy:
        raise ValueError("the sigma-side circuit must be clean")
    if noisy.n_measurements != clean.n_measurements or noisy.L != clean.L:
        raise ValueError("noisy and clean circuits are not aligned")
    if noisy.n_measurements == 0:
        return Fraction(1)
    if method == "auto":
        method = "count" if _dominated(noisy, clean, rho, sigma) else "affine"
    if method == "count":
        if not _dominated(noisy, clean, rho, sigma):
            raise ValueError("count route needs rho's group inside sigma's and a shared skeleton")
        n_rho = count_random(noisy, rho)
        n_sigma = count_random(clean, sigma)
        return Fraction(2 ** n_sigma, 2 ** n_rho)
    if method == "affine":
        return affine_chi(record_map(noisy, rho), record_map(clean, sigma))
    if method == "register":
        g_rho = _register_group(noisy, rho)
        g_sigma = _register_group(clean, sigma)
        inter, contradiction = group_intersection_size(g_rho, g_sigma)
        if contradiction:
            return Fraction(0)
        return Fraction(inter, 2 ** len(g_sigma))
    raise ValueError(f"unknown method {method!r}")


# -- inequality audit ------------------------------------------------------------------------

@dataclass
class InequalityReport:
    lhs: Fraction
    rhs: Fraction
    mode: str

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def equality(self) -> bool:
        return self.lhs == self.rhs


def _apply_channels(state: InitialState, L: int, channels) -> GeneratorSet:
    st = MixedStabilizerState(state.group_for(L))
    for p in channels:
        st.dephase(p)
    return st.group


def check_inequality(noisy: Circuit, clean: Circuit, rho1: InitialState, sigma: InitialState,
                     rho2: Optional[InitialState] = None, channels=None) -> InequalityReport:
    """Audit chi(C', rho | C, sigma) <= chi(C', sigma | C, sigma).

    With ``rho2`` and ``channels`` (Paulis whose dephasing maps ``rho2`` to
    ``rho1``) audit chi(C', rho1 | C, sigma) <= chi(C', rho2 | C, sigma)
    instead.
    """
    if rho2 is None:
        lhs = exact_chi(noisy, clean, rho1, sigma, method="affine")
        rhs = exact_chi(noisy, clean, sigma, sigma, method="affine")
        return InequalityReport(lhs, rhs, "sigma-reference")
    if channels is None:
        raise ValueError("the second mode needs the channels relating rho2 to rho1")
    L = clean.L
    g1 = rho1.group_for(L)
    g2 = _apply_channels(rho2, L, channels)
    same = len(g1) == len(g2) and all(
        MixedStabilizerState(g2).membership(g) == 1 for g in g1
    )
    if not same:
        raise ValueError("rho1 is not the image of rho2 under the declared channels")
    lhs = exact_chi(noisy, clean, rho1, sigma, method="affine")
    rhs = exact_chi(noisy, clean, rho2, sigma, method="affine")
    return InequalityReport(lhs, rhs, "channel")
