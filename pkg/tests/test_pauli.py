import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cultivation.pauli import (
    GATE_IMAGES,
    CliffordGate,
    PauliString,
    conjugate,
    conjugate_all,
    gate_arity,
    pauli_mul,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
LETTER = {"I": I2, "X": X, "Y": Y, "Z": Z}
H = (X + Z) / np.sqrt(2)
S = np.diag([1, 1j])
HXY = (X + Y) / np.sqrt(2)


def _cx(n, c, t):
    dim = 2 ** n
    u = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        bits = [(b >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[c]:
            bits[t] ^= 1
        u[sum(v << (n - 1 - q) for q, v in enumerate(bits)), b] = 1
    return u


# dense unitaries, qubit 0 is the most significant tensor factor
UNITARY = {
    "I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "S": S, "S_DAG": S.conj().T,
    "H_XY": HXY, "IZH_XY": 1j * Z @ HXY,
    "CX": _cx(2, 0, 1),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": _cx(2, 0, 1) @ _cx(2, 1, 0) @ _cx(2, 0, 1),
    "CXSWAP": _cx(2, 1, 0) @ _cx(2, 0, 1),
}


def dense(p: PauliString) -> np.ndarray:
    m = np.array([[1]], dtype=complex)
    for c in p.letters():
        m = np.kron(m, LETTER[c])
    return p.phase * m


def embed_unitary(u, n, targets):
    """Dense unitary of a gate acting on ``targets`` of n qubits."""
    k = len(targets)
    rest = [q for q in range(n) if q not in targets]
    perm = list(targets) + rest
    full = np.kron(u, np.eye(2 ** (n - k)))
    t = full.reshape([2] * (2 * n))
    inv = np.argsort(perm)
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2 ** n, 2 ** n)


paulis = st.integers(1, 4).flatmap(
    lambda n: st.builds(lambda x, z, r: PauliString(n, x, z, r),
                        st.integers(0, 2 ** n - 1), st.integers(0, 2 ** n - 1), st.integers(0, 3)))


def pair_of(n):
    s = st.builds(lambda x, z, r: PauliString(n, x, z, r),
                  st.integers(0, 2 ** n - 1), st.integers(0, 2 ** n - 1), st.integers(0, 3))
    return st.tuples(s, s)


def test_xz_is_minus_i_y():
    x, z = PauliString.from_letters("X"), PauliString.from_letters("Z")
    assert pauli_mul(x, z) == PauliString.from_letters("Y", phase=-1j)
    assert str(z * x) == "+iY"


def test_letters_round_trip():
    for s in ["+XYZI", "-YY", "+iZ", "-iXIY"]:
        assert str(PauliString.from_letters(s)) == s


def test_size_mismatch():
    with pytest.raises(ValueError):
        pauli_mul(PauliString.identity(2), PauliString.identity(3))


@given(st.integers(1, 4).flatmap(pair_of))
def test_multiplication_matches_dense(ab):
    a, b = ab
    assert np.allclose(dense(a * b), dense(a) @ dense(b))


@given(st.integers(1, 4).flatmap(pair_of))
def test_commutation_matches_dense(ab):
    a, b = ab
    da, db = dense(a), dense(b)
    assert a.commutes(b) == np.allclose(da @ db, db @ da)


@given(paulis)
def test_hermitian_flag(p):
    d = dense(p)
    assert p.is_hermitian == np.allclose(d, d.conj().T)


@pytest.mark.parametrize("name", sorted(GATE_IMAGES))
def test_gate_images_match_unitaries(name):
    u = UNITARY[name]
    k = gate_arity(name)
    for letters in itertools.product("IXYZ", repeat=k):
        p = PauliString.from_letters("".join(letters))
        got = conjugate(p, CliffordGate(name, tuple(range(k))))
        assert np.allclose(dense(got), u @ dense(p) @ u.conj().T), (name, letters)


def test_hxy_and_cxswap_images():
    g = CliffordGate("H_XY", (0,))
    assert str(conjugate(PauliString.from_letters("X"), g)) == "+Y"
    assert str(conjugate(PauliString.from_letters("Z"), g)) == "-Z"
    cxs = CliffordGate("CXSWAP", (0, 1))
    seq = [CliffordGate("CX", (0, 1)), CliffordGate("CX", (1, 0))]
    for s in ["XI", "ZI", "IX", "IZ", "YY"]:
        p = PauliString.from_letters(s)
        # U P U^dag with U = CX(1,0) CX(0,1): the first gate conjugates first
        assert conjugate(p, cxs) == conjugate_all(p, seq)


@settings(max_examples=60)
@given(st.data())
def test_conjugation_on_larger_registers(data):
    n = data.draw(st.integers(2, 4))
    name = data.draw(st.sampled_from(sorted(GATE_IMAGES)))
    k = gate_arity(name)
    targets = tuple(data.draw(st.permutations(range(n)))[:k])
    p = PauliString(n, data.draw(st.integers(0, 2 ** n - 1)), data.draw(st.integers(0, 2 ** n - 1)),
                    data.draw(st.integers(0, 3)))
    u = embed_unitary(UNITARY[name], n, targets)
    got = conjugate(p, CliffordGate(name, targets))
    assert np.allclose(dense(got), u @ dense(p) @ u.conj().T)


def test_bad_gates():
    with pytest.raises(ValueError):
        CliffordGate("CX", (0, 0))
    with pytest.raises(ValueError):
        CliffordGate("FOO", (0,))
    with pytest.raises(ValueError):
        conjugate(PauliString.identity(2), CliffordGate("H", (5,)))


@given(paulis)
def test_embed_restrict(p):
    big = p.embed(p.n + 2, [q + 1 for q in range(p.n)])
    assert big.restrict([q + 1 for q in range(p.n)]).letters() == p.letters()
    assert big.phase == p.phase
