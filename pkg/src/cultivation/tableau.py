"""Bit-packed stabilizer tableau (Aaronson-Gottesman style, XZ-form phases).

Rows ``0..n-1`` are destabilizers, rows ``n..2n-1`` stabilizers.  Each row is
``i**r * X^x Z^z`` with ``x``/``z`` packed into uint64 words, so row products
are word XORs plus a popcount for the phase.
"""
from __future__ import annotations

import numpy as np

from .pauli import CliffordGate, PauliString, gate_arity, local_table

_ONE = np.uint64(1)


def _words(n: int) -> int:
    return max(1, (n + 63) // 64)


def _pack(v: int, w: int) -> np.ndarray:
    out = np.zeros(w, dtype=np.uint64)
    for i in range(w):
        out[i] = (v >> (64 * i)) & 0xFFFFFFFFFFFFFFFF
    return out


def _unpack(words: np.ndarray) -> int:
    v = 0
    for i, w in enumerate(words.tolist()):
        v |= int(w) << (64 * i)
    return v


def _popcount_words(a: np.ndarray) -> int:
    return int(np.bitwise_count(a).sum())


class NonHermitianMeasurement(ValueError):
    pass


class StabilizerTableau:
    """Stabilizer state on ``n`` qubits, initially ``|0...0>``."""

    def __init__(self, n: int):
        self.n = n
        w = self.w = _words(n)
        self.x = np.zeros((2 * n, w), dtype=np.uint64)
        self.z = np.zeros((2 * n, w), dtype=np.uint64)
        self.r = np.zeros(2 * n, dtype=np.int64)
        for q in range(n):
            self.x[q, q // 64] |= _ONE << np.uint64(q % 64)
            self.z[n + q, q // 64] |= _ONE << np.uint64(q % 64)

    def copy(self) -> "StabilizerTableau":
        t = StabilizerTableau.__new__(StabilizerTableau)
        t.n, t.w = self.n, self.w
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    # -- row access ---------------------------------------------------
    def row(self, i: int) -> PauliString:
        return PauliString(self.n, _unpack(self.x[i]), _unpack(self.z[i]), int(self.r[i]))

    def stabilizers(self) -> list[PauliString]:
        return [self.row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n)]

    def _bit(self, arr: np.ndarray, q: int) -> np.ndarray:
        return (arr[:, q // 64] >> np.uint64(q % 64)) & _ONE

    def _rowmul(self, h: int, i: int) -> None:
        """row_h <- row_h * row_i."""
        self.r[h] = (self.r[h] + self.r[i] + 2 * _popcount_words(self.z[h] & self.x[i])) % 4
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    # -- gates --------------------------------------------------------
    def apply(self, g: CliffordGate) -> "StabilizerTableau":
        for t in g.targets:
            if not 0 <= t < self.n:
                raise ValueError(f"target {t} out of range")
        table = local_table(g.name)
        k = gate_arity(g.name)
        pat = np.zeros(2 * self.n, dtype=np.int64)
        for j, t in enumerate(g.targets):
            pat |= self._bit(self.x, t).astype(np.int64) << (2 * j)
            pat |= self._bit(self.z, t).astype(np.int64) << (2 * j + 1)
        new = np.array([e[0] for e in table], dtype=np.int64)[pat]
        dr = np.array([e[1] for e in table], dtype=np.int64)[pat]
        self.r = (self.r + dr) % 4
        for j, t in enumerate(g.targets):
            wi, b = t // 64, np.uint64(t % 64)
            clear = ~(_ONE << b)
            self.x[:, wi] = (self.x[:, wi] & clear) | (((new >> (2 * j)) & 1).astype(np.uint64) << b)
            self.z[:, wi] = (self.z[:, wi] & clear) | (((new >> (2 * j + 1)) & 1).astype(np.uint64) << b)
        del k
        return self

    def apply_pauli(self, p: PauliString) -> "StabilizerTableau":
        """Conjugate the state by a Pauli: rows anticommuting with it flip sign."""
        px, pz = _pack(p.x, self.w), _pack(p.z, self.w)
        anti = (np.bitwise_count(self.x & pz).sum(axis=1) + np.bitwise_count(self.z & px).sum(axis=1)) % 2
        self.r = (self.r + 2 * anti) % 4
        return self

    # -- measurement --------------------------------------------------
    def _anticommuting_rows(self, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
        s = np.bitwise_count(self.x & pz).sum(axis=1) + np.bitwise_count(self.z & px).sum(axis=1)
        return (s % 2).astype(bool)

    def peek(self, p: PauliString) -> int | None:
        """Deterministic eigenvalue (+1/-1) of Hermitian ``p``, or None if random."""
        if not p.is_hermitian:
            raise NonHermitianMeasurement(str(p))
        px, pz = _pack(p.x, self.w), _pack(p.z, self.w)
        anti = self._anticommuting_rows(px, pz)
        if anti[self.n:].any():
            return None
        # p = +-prod of stabilizers whose destabilizer anticommutes with p
        acc_x = np.zeros(self.w, dtype=np.uint64)
        acc_z = np.zeros(self.w, dtype=np.uint64)
        acc_r = 0
        for i in np.flatnonzero(anti[: self.n]):
            s = self.n + i
            acc_r += int(self.r[s]) + 2 * _popcount_words(acc_z & self.x[s])
            acc_x ^= self.x[s]
            acc_z ^= self.z[s]
        acc_r %= 4
        # acc == i^acc_r X^px Z^pz must equal i^(p.r) X^px Z^pz times sign
        diff = (p.r - acc_r) % 4
        return 1 if diff == 0 else -1

    def measure(self, p: PauliString, rng: np.random.Generator | None = None,
                forced: int | None = None) -> tuple[int, bool]:
        """Projectively measure Hermitian ``p``; returns (outcome +-1, deterministic).

        Random outcomes are drawn from ``rng`` unless ``forced`` is given.
        """
        if p.n != self.n:
            raise ValueError("size mismatch")
        det = self.peek(p)
        if det is not None:
            return det, True
        px, pz = _pack(p.x, self.w), _pack(p.z, self.w)
        anti = np.flatnonzero(self._anticommuting_rows(px, pz))
        k = anti[anti >= self.n][0]
        for i in anti:
            if i != k:
                self._rowmul(i, k)
        if forced is not None:
            outcome = forced
        else:
            outcome = 1 if (rng or np.random.default_rng()).integers(2) == 0 else -1
        dk = k - self.n
        self.x[dk], self.z[dk], self.r[dk] = self.x[k], self.z[k], self.r[k]
        self.x[k], self.z[k] = px, pz
        self.r[k] = (p.r + (0 if outcome == 1 else 2)) % 4
        return outcome, False

    def contains(self, p: PauliString) -> bool:
        return group_contains(self, p)

    def check_invariants(self) -> None:
        """Raise if the symplectic structure of the rows is broken."""
        n = self.n
        rows = [self.row(i) for i in range(2 * n)]
        for i in range(n):
            for j in range(n):
                if not rows[n + i].commutes(rows[n + j]):
                    raise AssertionError(f"stabilizers {i},{j} anticommute")
                want = i != j
                if rows[i].commutes(rows[n + j]) != want:
                    raise AssertionError(f"destabilizer {i} vs stabilizer {j}")
        for i in range(2 * n):
            if not rows[i].is_hermitian:
                raise AssertionError(f"row {i} not Hermitian")


def tableau_apply(t: StabilizerTableau, g: CliffordGate) -> StabilizerTableau:
    return t.copy().apply(g)


def tableau_measure(t: StabilizerTableau, p: PauliString, rng: np.random.Generator | None = None):
    t2 = t.copy()
    outcome, det = t2.measure(p, rng)
    return outcome, t2, det


def group_contains(t: StabilizerTableau, p: PauliString) -> bool:
    """True iff ``p`` with its sign lies in the stabilizer group of ``t``."""
    if p.n != t.n:
        raise ValueError("size mismatch")
    if not p.is_hermitian:
        return False
    if p.x == 0 and p.z == 0:
        return p.phase_exponent == 0
    return t.peek(p) == 1


def stabilizer_rank(paulis: list[PauliString]) -> int:
    """GF(2) rank of the symplectic vectors of ``paulis`` (signs ignored)."""
    rows = [(p.x << p.n) | p.z for p in paulis]
    rank = 0
    pivots: dict[int, int] = {}
    for v in rows:
        while v:
            hb = v.bit_length() - 1
            if hb in pivots:
                v ^= pivots[hb]
            else:
                pivots[hb] = v
                rank += 1
                break
    return rank
