"""Exact n-qubit Pauli algebra and the Clifford gate table.

Paulis are stored as a pair of Python ints used as bit vectors (bit ``q`` of
``x`` / ``z`` marks an X / Z component on qubit ``q``) plus a phase exponent.
Internally the operator is ``i**r * prod_q X_q**x_q Z_q**z_q`` ("XZ form"):
with that ordering the phase of a product is just a popcount, so every
operation is word-parallel over the bits.  The public ``phase`` is the phase
in front of the usual ``X/Y/Z`` letters, i.e. ``Y = i X Z`` is absorbed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

_PHASES = (1, 1j, -1, -1j)
_PHASE_TEXT = ("+", "+i", "-", "-i")


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator with an exact phase in {+1, +i, -1, -i}."""

    n: int
    x: int
    z: int
    r: int = 0  # XZ-form phase exponent, see module docstring

    def __post_init__(self):
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bits set beyond qubit count")
        object.__setattr__(self, "r", self.r % 4)

    # -- construction -------------------------------------------------
    @classmethod
    def identity(cls, n: int, phase: complex = 1) -> "PauliString":
        return cls(n, 0, 0, _phase_exponent(phase))

    @classmethod
    def from_letters(cls, letters: str, phase: complex = 1) -> "PauliString":
        """``"XIZY"`` style constructor; an optional leading sign is accepted."""
        sign = 0
        for prefix, k in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2), ("i", 1)):
            if letters.startswith(prefix):
                sign = k
                letters = letters[len(prefix):]
                break
        x = z = 0
        for q, c in enumerate(letters):
            if c in "XY":
                x |= 1 << q
            if c in "ZY":
                z |= 1 << q
            if c not in "IXYZ_":
                raise ValueError(f"bad Pauli letter {c!r}")
        n = len(letters)
        e = (sign + _phase_exponent(phase)) % 4
        return cls(n, x, z, e + _popcount(x & z))

    @classmethod
    def from_sparse(cls, n: int, terms: dict[int, str] | Iterable[tuple[int, str]],
                    phase: complex = 1) -> "PauliString":
        items = terms.items() if isinstance(terms, dict) else terms
        x = z = 0
        for q, c in items:
            if c in "XY":
                x |= 1 << q
            if c in "ZY":
                z |= 1 << q
        return cls(n, x, z, _phase_exponent(phase) + _popcount(x & z))

    @classmethod
    def from_sets(cls, n: int, xs: Iterable[int] = (), zs: Iterable[int] = (),
                  phase: complex = 1) -> "PauliString":
        """X on ``xs`` and Z on ``zs`` (overlap becomes Y), letter-form phase."""
        x = z = 0
        for q in xs:
            x |= 1 << q
        for q in zs:
            z |= 1 << q
        return cls(n, x, z, _phase_exponent(phase) + _popcount(x & z))

    # -- properties ---------------------------------------------------
    @property
    def phase_exponent(self) -> int:
        """Letter-form phase as a power of i."""
        return (self.r - _popcount(self.x & self.z)) % 4

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exponent]

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exponent % 2 == 0

    @property
    def sign(self) -> int:
        e = self.phase_exponent
        if e % 2:
            raise ValueError("non-Hermitian Pauli has no sign")
        return 1 if e == 0 else -1

    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def support(self) -> list[int]:
        v, out, q = self.x | self.z, [], 0
        while v:
            if v & 1:
                out.append(q)
            v >>= 1
            q += 1
        return out

    def letter(self, q: int) -> str:
        return "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]

    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase_exponent] + self.letters()

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    # -- algebra ------------------------------------------------------
    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.r + 2)

    def times_phase(self, phase: complex) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.r + _phase_exponent(phase))

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def unsigned(self) -> "PauliString":
        """Same Pauli letters with phase +1."""
        return PauliString(self.n, self.x, self.z, _popcount(self.x & self.z))

    def same_letters(self, other: "PauliString") -> bool:
        return self.x == other.x and self.z == other.z

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliString":
        """Place this Pauli on ``qubits`` of a larger n-qubit register."""
        x = z = 0
        for j, q in enumerate(qubits):
            x |= ((self.x >> j) & 1) << q
            z |= ((self.z >> j) & 1) << q
        return PauliString(n, x, z, self.phase_exponent + _popcount(x & z))

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Letters on ``qubits`` only (phase dropped to +1)."""
        x = z = 0
        for j, q in enumerate(qubits):
            x |= ((self.x >> q) & 1) << j
            z |= ((self.z >> q) & 1) << j
        return PauliString(len(qubits), x, z, _popcount(x & z))


def _phase_exponent(phase: complex) -> int:
    for k, v in enumerate(_PHASES):
        if phase == v:
            return k
    raise ValueError(f"phase must be one of +-1, +-i, got {phase}")


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a * b``."""
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n}")
    # (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{z1.x2} X^{x1^x2} Z^{z1^z2}, qubit-wise
    r = a.r + b.r + 2 * _popcount(a.z & b.x)
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, r)


# ---------------------------------------------------------------------------
# Clifford gates, defined by their Heisenberg images of X and Z per target.

@dataclass(frozen=True)
class CliffordGate:
    name: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.name not in GATE_IMAGES:
            raise ValueError(f"unknown gate {self.name!r}")
        arity = gate_arity(self.name)
        if len(self.targets) != arity:
            raise ValueError(f"{self.name} takes {arity} targets")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("repeated target")


# name -> images of (X_0, Z_0[, X_1, Z_1]) as letter strings over the targets
GATE_IMAGES: dict[str, tuple[str, ...]] = {
    "I": ("X", "Z"),
    "X": ("X", "-Z"),
    "Y": ("-X", "-Z"),
    "Z": ("-X", "Z"),
    "H": ("Z", "X"),
    "S": ("Y", "Z"),
    "S_DAG": ("-Y", "Z"),
    "H_XY": ("Y", "-Z"),
    "IZH_XY": ("-Y", "-Z"),
    "CX": ("XX", "ZI", "IX", "ZZ"),
    "CZ": ("XZ", "ZI", "ZX", "IZ"),
    "SWAP": ("IX", "IZ", "XI", "ZI"),
    # CX(first -> second) followed by CX(second -> first)
    "CXSWAP": ("IX", "ZZ", "XX", "ZI"),
}

SINGLE_QUBIT_GATES = frozenset(k for k, v in GATE_IMAGES.items() if len(v) == 2)
TWO_QUBIT_GATES = frozenset(k for k, v in GATE_IMAGES.items() if len(v) == 4)


def gate_arity(name: str) -> int:
    return len(GATE_IMAGES[name]) // 2


@lru_cache(maxsize=None)
def gate_images(name: str) -> tuple[PauliString, ...]:
    return tuple(PauliString.from_letters(s) for s in GATE_IMAGES[name])


@lru_cache(maxsize=None)
def local_table(name: str) -> tuple[tuple[int, int, int], ...]:
    """Conjugation table over the 4**k local Pauli patterns of a k-qubit gate.

    Entry ``pattern`` (bit 2j = x of target j, bit 2j+1 = z of target j) gives
    ``(new_pattern, phase_delta)`` for the XZ-form operator with that pattern.
    """
    k = gate_arity(name)
    imgs = gate_images(name)
    out = []
    for pat in range(4 ** k):
        acc = PauliString.identity(k)
        for j in range(k):
            if (pat >> (2 * j)) & 1:
                acc = acc * imgs[2 * j]
            if (pat >> (2 * j + 1)) & 1:
                acc = acc * imgs[2 * j + 1]
        new = 0
        for j in range(k):
            new |= ((acc.x >> j) & 1) << (2 * j)
            new |= ((acc.z >> j) & 1) << (2 * j + 1)
        out.append((new, acc.r))
    return tuple(out)


def conjugate(p: PauliString, g: CliffordGate) -> PauliString:
    """Return ``g p g^dagger`` with exact phase."""
    for t in g.targets:
        if not 0 <= t < p.n:
            raise ValueError(f"target {t} out of range for {p.n} qubits")
    table = local_table(g.name)
    pat = 0
    x, z = p.x, p.z
    for j, t in enumerate(g.targets):
        pat |= ((x >> t) & 1) << (2 * j) | ((z >> t) & 1) << (2 * j + 1)
        x &= ~(1 << t)
        z &= ~(1 << t)
    new, dr = table[pat]
    for j, t in enumerate(g.targets):
        x |= ((new >> (2 * j)) & 1) << t
        z |= ((new >> (2 * j + 1)) & 1) << t
    return PauliString(p.n, x, z, p.r + dr)


def conjugate_all(p: PauliString, gates: Iterable[CliffordGate]) -> PauliString:
    for g in gates:
        p = conjugate(p, g)
    return p
