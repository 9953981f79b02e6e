"""Randomized correctness audits: compression, cross-entropy inequality, dense oracle.

Each audit draws its instances from a seeded generator and returns an
``AuditReport``; ``report.passed`` is False as soon as one instance fails.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .circuits import CircuitSpec, build_circuit, derive_seed, inject_noise, make_rng
from .clifford import CliffordGate, sample_two_qubit_clifford
from .compression import (
    compress, compressed_distribution, compressed_support, decompose_to_gates, gate_counts, to_pbc,
    uncompressed_support,
)
from .dense import T_AMPLITUDE, DenseState, density_from_generators, enumerate_records, exact_chi_dense, tvd
from .engine import AffineSpace, record_map
from .pauli import PauliString
from .stabilizer import MixedStabilizerState
from .states import InitialState, random_stabilizer_group
from .xeb import check_inequality, exact_chi

__all__ = ["AuditReport", "audit_compression", "audit_inequality", "audit_oracle", "AUDITS"]

_T = [1 / np.sqrt(2), T_AMPLITUDE]


@dataclass
class AuditReport:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = " ".join(f"{k}={v}" for k, v in sorted(self.stats.items()))
        return f"{status} {self.name}: {self.checked} instances, {len(self.failures)} failures, {self.seconds:.1f}s {extra}".rstrip()


def _random_circuit(rng, L: int, ratio=3, p_range=(0.02, 0.5), conn=None) -> "Circuit":
    conn = conn or ("1d" if rng.random() < 0.5 else "a2a")
    spec = CircuitSpec(L, conn, float(rng.uniform(*p_range)), encoding_ratio=ratio, bulk_ratio=ratio,
                       seed=int(rng.integers(1 << 62)))
    return build_circuit(spec)


def _corrupt(cc):
    """Flip the constant of every record bit: a broken sign map."""
    return replace(cc, offset=cc.offset ^ 1)


def audit_compression(budget: int = 500, seed: int = 0, L_max: int = 8, magic_max_measurements: int = 12,
                      corrupt: bool = False) -> AuditReport:
    """Compressed vs uncompressed record distributions plus gate-count bounds.

    Stabilizer inputs on A: exact equality of the affine record supports
    (uniform distributions, so equal supports mean equal distributions).
    Magic inputs: dense enumeration of both sides, TVD <= 1e-10; these use
    one-L-per-stage circuits with at most ``magic_max_measurements``
    measurements so the uncompressed side stays enumerable.
    """
    rep = AuditReport("compression")
    t0 = time.time()
    rng = make_rng(derive_seed(seed, 0xC0))
    sizes = [L for L in range(2, L_max + 1, 2)]
    worst = 0.0
    for i in range(budget):
        L = sizes[i % len(sizes)]
        k = L // 2
        # stabilizer input, full-length circuit
        c = _random_circuit(rng, L)
        cc = compress(to_pbc(c))
        if corrupt:
            cc = _corrupt(cc)
        group_a = random_stabilizer_group(rng, k, int(rng.integers(0, k + 1)) if i % 4 == 3 else None)
        if uncompressed_support(c, group_a, cc.A) != compressed_support(cc, group_a):
            rep.failures.append(("stabilizer", i, L))
        _check_bounds(rep, cc, L, i)
        # magic input
        while True:
            m = _random_circuit(rng, L, ratio=1, p_range=(0.02, 0.4))
            if m.n_measurements <= magic_max_measurements:
                break
        cm = compress(to_pbc(m))
        if corrupt:
            cm = _corrupt(cm)
        d_full = enumerate_records(m, DenseState.alternating_magic(L))
        raw = enumerate_records(decompose_to_gates(cm), DenseState.product([_T] * cm.k))
        dist = tvd(d_full, compressed_distribution(cm, raw))
        worst = max(worst, dist)
        if not dist <= 1e-10:
            rep.failures.append(("magic", i, L, dist))
        _check_bounds(rep, cm, L, i)
        rep.checked += 1
    rep.stats["max_tvd"] = f"{worst:.1e}"
    rep.seconds = time.time() - t0
    return rep


def _check_bounds(rep: AuditReport, cc, L: int, i: int) -> None:
    k = cc.k
    counts = gate_counts(decompose_to_gates(cc))
    ok = (k == L // 2 and len(cc.quantum_measurements) <= L // 2
          and counts["single_qubit"] <= k * k and counts["two_qubit"] <= 2 * k * k)
    if not ok:
        rep.failures.append(("bounds", i, L, counts))


def _distinct_state(rng, L: int, sigma: InitialState) -> InitialState:
    while True:
        rho = InitialState.custom(random_stabilizer_group(rng, L, int(rng.integers(0, L + 1))))
        if not (rho.is_contained_in(sigma, L) and sigma.is_contained_in(rho, L)):
            return rho


def audit_inequality(budget: int = 10_000, seed: int = 0, L: int = 10, q: float = 0.005,
                     L_min: int = 2) -> AuditReport:
    """chi(C', rho | C, sigma) <= chi(C', sigma | C, sigma) with both sides exact.

    Sizes cycle over the even values in ``[L_min, L]``; stage lengths vary
    from L/4 to 3L layers so that short, weakly purifying circuits are
    covered too.  rho and sigma are random stabilizer states (pure or mixed)
    with rho != sigma.
    """
    rep = AuditReport("inequality")
    t0 = time.time()
    rng = make_rng(derive_seed(seed, 0x1E))
    sizes = list(range(L_min, L + 1, 2))
    strict = 0
    for i in range(budget):
        n = sizes[i % len(sizes)]
        clean = _random_circuit(rng, n, ratio=float(rng.choice([0.25, 0.5, 1, 3])))
        noisy = inject_noise(clean, q, rng)
        sigma = InitialState.custom(random_stabilizer_group(rng, n, int(rng.integers(0, n + 1))))
        rho = _distinct_state(rng, n, sigma)
        r = check_inequality(noisy, clean, rho, sigma)
        if not r.holds:
            rep.failures.append((i, n, float(r.lhs), float(r.rhs)))
        strict += r.lhs < r.rhs
        rep.checked += 1
    rep.stats["strict"] = strict
    rep.seconds = time.time() - t0
    return rep


def _random_pauli(rng, n: int) -> PauliString:
    while True:
        p = PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)), 0)
        if not p.is_identity():
            return p


def _support_and_uniform(dist: dict, rm) -> bool:
    space = AffineSpace.from_record_map(rm)
    w = 2.0 ** -rm.n_random
    if len(dist) != 1 << space.dim:
        return False
    return all(space.contains(m) and abs(pr - w) < 1e-10 for m, pr in dist.items())


def audit_oracle(budget: int = 1000, seed: int = 0, n_max: int = 6) -> AuditReport:
    """Stabilizer engine vs dense oracle: post-states, branch probabilities, chi.

    Each workload is a random operation sequence (gates, Pauli measurements,
    dephasing, erasure) on a random stabilizer state, followed by a random
    circuit whose record distribution and cross entropy are compared.
    """
    rep = AuditReport("oracle")
    t0 = time.time()
    rng = make_rng(derive_seed(seed, 0x0A))
    for i in range(budget):
        n = 1 + i % n_max
        st = MixedStabilizerState(random_stabilizer_group(rng, n, int(rng.integers(0, n + 1))), rng=i)
        dense = DenseState(n, rho=density_from_generators(st.group))
        ok = True
        for _ in range(int(rng.integers(1, 30))):
            r = rng.random()
            if r < 0.4:
                if n >= 2:
                    a, b = rng.choice(n, 2, replace=False)
                    g = sample_two_qubit_clifford(rng, (int(a), int(b)))
                else:
                    g = CliffordGate((0,), int(rng.integers(24)))
                st.apply_gate(g)
                dense.apply_gate(g)
            elif r < 0.75:
                p = _random_pauli(rng, n)
                out = st.measure(p)
                pr = dense.project(p, out.bit)
                ok &= abs(pr - (1.0 if out.deterministic else 0.5)) < 1e-10
                dense.normalize()
            elif r < 0.88:
                p = _random_pauli(rng, n)
                st.dephase(p)
                dense.dephase(p)
            else:
                qb = int(rng.integers(n))
                st.erase(qb)
                dense.erase(qb)
        ok &= np.abs(density_from_generators(st.group) - dense.density()).max() < 1e-10
        # circuit-level: distributions and chi
        L = 2 * (1 + i % 3)
        clean = _random_circuit(rng, L, ratio=1, p_range=(0.05, 0.4))
        if clean.n_measurements <= 8:
            noisy = inject_noise(clean, 0.05, rng)
            rho = InitialState.custom(random_stabilizer_group(rng, L, int(rng.integers(0, L + 1))))
            sigma = InitialState.custom(random_stabilizer_group(rng, L, int(rng.integers(0, L + 1))))
            d_rho, d_sigma = DenseState.from_initial(rho, L), DenseState.from_initial(sigma, L)
            ok &= _support_and_uniform(enumerate_records(noisy, d_rho), record_map(noisy, rho))
            ok &= abs(exact_chi_dense(noisy, clean, d_rho, d_sigma) - float(exact_chi(noisy, clean, rho, sigma))) < 1e-10
        if not ok:
            rep.failures.append((i, n))
        rep.checked += 1
    rep.seconds = time.time() - t0
    return rep


AUDITS = {"compression": audit_compression, "inequality": audit_inequality, "oracle": audit_oracle}
