import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mipt_xeb.dense import density_from_generators, pauli_matrix
from mipt_xeb.pauli import (
    DimensionError, GeneratorSet, PauliString, commutes, group_intersection_size, membership, pauli_mul,
)

from conftest import random_pauli, random_stabilizer_group

paulis = st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1), st.integers(0, 3))
)


def P(t):
    return PauliString(*t)


def test_xz_is_minus_i_y():
    out = pauli_mul(PauliString.from_literal("XI"), PauliString.from_literal("ZI"))
    assert (out.x, out.z, out.phase) == (1, 1, 3)
    assert out == PauliString(2, 1, 1, 3)


def test_identity_product():
    p = PauliString.from_literal("-XYZI")
    assert pauli_mul(p, PauliString.identity(4)) == p
    assert pauli_mul(PauliString.identity(4), p) == p


def test_literal_roundtrip_and_bit_order():
    p = PauliString.from_literal("-XIZY")
    assert p.char(0) == "X" and p.char(2) == "Z" and p.char(3) == "Y"
    assert p.to_literal() == "-XIZY"
    assert PauliString.from_literal(p.to_literal()) == p
    with pytest.raises(ValueError):
        PauliString.from_literal("XQ")


def test_dimension_errors():
    a, b = PauliString.from_literal("X"), PauliString.from_literal("XX")
    with pytest.raises(DimensionError):
        pauli_mul(a, b)
    with pytest.raises(DimensionError):
        commutes(a, b)
    with pytest.raises(DimensionError):
        group_intersection_size(GeneratorSet.computational(1), GeneratorSet.computational(2))


def test_mul_matches_dense_n8(rng):
    for _ in range(1000):
        a = random_pauli(rng, 8, hermitian=False)
        b = random_pauli(rng, 8, hermitian=False)
        if _ % 50 == 0:  # full matrices are 256x256; sample a subset densely
            np.testing.assert_allclose(pauli_matrix(pauli_mul(a, b)), pauli_matrix(a) @ pauli_matrix(b), atol=1e-12)
        else:
            # compare on a random vector to keep the loop cheap
            v = rng.normal(size=256) + 1j * rng.normal(size=256)
            lhs = pauli_matrix(pauli_mul(a, b)) @ v if _ % 10 == 0 else None
            if lhs is not None:
                np.testing.assert_allclose(lhs, pauli_matrix(a) @ (pauli_matrix(b) @ v), atol=1e-9)
            assert pauli_mul(a, b).x == a.x ^ b.x and pauli_mul(a, b).z == a.z ^ b.z


@given(paulis, st.data())
@settings(max_examples=200, deadline=None)
def test_mul_exact_phase_small(t, data):
    n = t[0]
    u = data.draw(st.tuples(st.just(n), st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1), st.integers(0, 3)))
    a, b = P(t), P(u)
    np.testing.assert_allclose(pauli_matrix(a * b), pauli_matrix(a) @ pauli_matrix(b), atol=1e-12)


@given(paulis, st.data())
@settings(max_examples=200, deadline=None)
def test_commutation_symmetry_and_swap_phase(t, data):
    n = t[0]
    u = data.draw(st.tuples(st.just(n), st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1), st.integers(0, 3)))
    a, b = P(t), P(u)
    assert commutes(a, b) == commutes(b, a)
    ab, ba = a * b, b * a
    assert (ab.x, ab.z) == (ba.x, ba.z)
    assert (ab.phase - ba.phase) % 4 == (0 if commutes(a, b) else 2)


def test_commutes_examples():
    assert not commutes(PauliString.from_literal("X"), PauliString.from_literal("Z"))
    assert commutes(PauliString.from_literal("XX"), PauliString.from_literal("ZZ"))
    assert commutes(PauliString.from_literal("-XX"), PauliString.from_literal("+iZZ"))


def test_commutes_matches_dense_n10(rng):
    for _ in range(40):
        a, b = random_pauli(rng, 10), random_pauli(rng, 10)
        ma, mb = pauli_matrix(a), pauli_matrix(b)
        v = rng.normal(size=1024)
        dense = np.allclose(ma @ (mb @ v), mb @ (ma @ v))
        assert commutes(a, b) == dense


def test_membership_examples():
    g = GeneratorSet.from_literals(["+ZI", "+IZ"])
    assert membership(g, PauliString.from_literal("ZZ")) == 1
    assert membership(GeneratorSet.from_literals(["+Z"]), PauliString.from_literal("X")) is None
    g = GeneratorSet.from_literals(["-ZI", "+IZ"])
    assert membership(g, PauliString.from_literal("ZZ")) == -1
    with pytest.raises(ValueError):
        membership(g, PauliString.from_literal("+iZZ"))


def _subset_products(gens):
    n = gens.n
    out = {}
    for mask in range(1 << len(gens)):
        acc = PauliString.identity(n)
        for i, g in enumerate(gens):
            if (mask >> i) & 1:
                acc = acc * g
        out[(acc.x, acc.z)] = acc.phase
    return out


def test_membership_sound_and_complete(rng):
    for trial in range(60):
        n = int(rng.integers(1, 6))
        d = int(rng.integers(0, n + 1))
        gens = random_stabilizer_group(rng, n, d)
        table = _subset_products(gens)
        for _ in range(30):
            p = random_pauli(rng, n)
            got = membership(gens, p)
            ph = table.get((p.x, p.z))
            if ph is None:
                assert got is None
            else:
                assert got == (1 if ph == p.phase else -1)


def test_membership_large_generator_sets(rng):
    # generator sets of size up to 12 against exhaustive enumeration
    for n in (10, 12):
        gens = random_stabilizer_group(rng, n)
        table = _subset_products(gens)
        keys = list(table)
        for i in rng.choice(len(keys), 50, replace=False):
            x, z = keys[i]
            p = PauliString(n, x, z, 0)
            assert membership(gens, p) == (1 if table[(x, z)] == 0 else -1)


def test_generator_set_validation():
    with pytest.raises(ValueError):
        GeneratorSet.from_literals(["X", "Z"])
    with pytest.raises(ValueError):
        GeneratorSet.from_literals(["ZI", "IZ", "-ZZ"])
    with pytest.raises(ValueError):
        GeneratorSet(1, [PauliString(1, 1, 0, 1)])


def test_intersection_examples():
    n = 3
    a = GeneratorSet.computational(n)
    assert group_intersection_size(a, a) == (8, False)
    count, bad = group_intersection_size(GeneratorSet.from_literals(["+Z"]), GeneratorSet.from_literals(["-Z"]))
    assert bad


def test_intersection_matches_dense_trace(rng):
    for _ in range(200):
        n = 4
        a = random_stabilizer_group(rng, n, int(rng.integers(0, 5)))
        b = random_stabilizer_group(rng, n, int(rng.integers(0, 5))) if _ % 3 else a
        count, bad = group_intersection_size(a, b)
        tr = np.trace(density_from_generators(a) @ density_from_generators(b)).real
        if bad:
            assert abs(tr) < 1e-12
        else:
            assert abs(tr - count / 2 ** n) < 1e-12
