import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cultivation.pauli import GATE_IMAGES, CliffordGate, PauliString, gate_arity
from cultivation.tableau import (
    NonHermitianMeasurement,
    StabilizerTableau,
    group_contains,
    stabilizer_rank,
    tableau_measure,
)

from test_pauli import UNITARY, dense, embed_unitary

CLIFFORDS = sorted(GATE_IMAGES)


def gate_sequences(n):
    names = [g for g in CLIFFORDS if gate_arity(g) <= n]
    return st.lists(
        st.sampled_from(names).flatmap(
            lambda name: st.permutations(range(n)).map(lambda perm: (name, tuple(perm[:gate_arity(name)])))),
        max_size=12)


def statevector(n, gates):
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1
    for name, targets in gates:
        psi = embed_unitary(UNITARY[name], n, targets) @ psi
    return psi


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), gate_sequences(n))))
def test_tableau_matches_statevector(arg):
    n, gates = arg
    t = StabilizerTableau(n)
    for name, targets in gates:
        t.apply(CliffordGate(name, targets))
    t.check_invariants()
    psi = statevector(n, gates)
    for s in t.stabilizers():
        assert np.allclose(dense(s) @ psi, psi)
    # peek agrees with expectation values for every Hermitian Pauli
    for letters in itertools.product("IXYZ", repeat=n):
        p = PauliString.from_letters("".join(letters))
        ev = np.vdot(psi, dense(p) @ psi).real
        got = t.peek(p)
        if abs(ev) < 1e-9:
            assert got is None
        else:
            assert got == round(ev)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), gate_sequences(n))), st.data())
def test_measurement_projects(arg, data):
    n, gates = arg
    t = StabilizerTableau(n)
    for name, targets in gates:
        t.apply(CliffordGate(name, targets))
    psi = statevector(n, gates)
    letters = data.draw(st.lists(st.sampled_from("IXYZ"), min_size=n, max_size=n))
    p = PauliString.from_letters("".join(letters))
    forced = data.draw(st.sampled_from([1, -1]))
    ev = np.vdot(psi, dense(p) @ psi).real
    if abs(ev) > 1e-9:
        forced = round(ev)
    out, det = t.measure(p, forced=forced)
    assert det == (abs(ev) > 1e-9)
    assert out == forced
    proj = (np.eye(2 ** n) + out * dense(p)) / 2
    post = proj @ psi
    post /= np.linalg.norm(post)
    t.check_invariants()
    for s in t.stabilizers():
        assert np.allclose(dense(s) @ post, post)
    assert t.peek(p) == out


def test_random_measurement_statistics():
    rng = np.random.default_rng(1)
    outs = []
    for _ in range(400):
        out, _, det = tableau_measure(StabilizerTableau(1), PauliString.from_letters("X"), rng)
        assert not det
        outs.append(out)
    assert 150 < outs.count(1) < 250


def test_non_hermitian_measurement():
    t = StabilizerTableau(1)
    with pytest.raises(NonHermitianMeasurement):
        t.measure(PauliString.from_letters("iZ"))


def test_group_contains_exhaustive():
    # compare against the explicit 2^5-element stabilizer group
    t = StabilizerTableau(5)
    for g in [("H", (0,)), ("CX", (0, 1)), ("S", (1,)), ("CXSWAP", (2, 3)), ("H_XY", (4,)), ("CZ", (4, 0))]:
        t.apply(CliffordGate(*g))
    gens = t.stabilizers()
    group = set()
    for bits in itertools.product([0, 1], repeat=5):
        acc = PauliString.identity(5)
        for b, g in zip(bits, gens):
            if b:
                acc = acc * g
        group.add(acc)
    for letters in itertools.product("IXYZ", repeat=5):
        p = PauliString.from_letters("".join(letters))
        assert group_contains(t, p) == (p in group)
        assert group_contains(t, -p) == (-p in group)
    assert not group_contains(t, PauliString.identity(5, -1))
    assert group_contains(t, PauliString.identity(5))


def test_stabilizer_rank():
    ps = [PauliString.from_letters(s) for s in ["XX", "ZZ", "YY"]]
    assert stabilizer_rank(ps) == 2


def test_wide_tableau_words():
    n = 70
    t = StabilizerTableau(n)
    t.apply(CliffordGate("H", (0,)))
    for q in range(n - 1):
        t.apply(CliffordGate("CX", (q, q + 1)))
    ghz_x = PauliString(n, (1 << n) - 1, 0)
    assert t.peek(ghz_x) == 1
    assert t.peek(PauliString.from_sets(n, zs=[0, 69])) == 1
    assert t.peek(PauliString.from_sets(n, zs=[3])) is None
