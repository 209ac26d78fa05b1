"""Small GF(2) linear algebra over Python ints used as bit vectors."""
from __future__ import annotations

from typing import Sequence


class Eliminator:
    """Incremental row echelon form.

    Each stored row remembers which input rows were combined to form it, so
    ``express`` can return an explicit combination.
    """

    def __init__(self):
        self.pivots: dict[int, tuple[int, int]] = {}  # pivot bit -> (row, combo)
        self.count = 0

    def reduce(self, v: int) -> tuple[int, int]:
        combo = 0
        while v:
            top = v.bit_length() - 1
            hit = self.pivots.get(top)
            if hit is None:
                break
            v ^= hit[0]
            combo ^= hit[1]
        return v, combo

    def add(self, v: int) -> bool:
        """Insert a row; returns False when it was already in the span."""
        r, combo = self.reduce(v)
        combo ^= 1 << self.count
        self.count += 1
        if r == 0:
            return False
        self.pivots[r.bit_length() - 1] = (r, combo)
        return True

    def express(self, v: int) -> int | None:
        """Bitmask of input rows XOR-ing to ``v``, or None if outside the span."""
        # full reduction, not just the leading bit
        combo = 0
        while v:
            top = v.bit_length() - 1
            hit = self.pivots.get(top)
            if hit is None:
                return None
            v ^= hit[0]
            combo ^= hit[1]
        return combo

    @property
    def rank(self) -> int:
        return len(self.pivots)


def rank(rows: Sequence[int]) -> int:
    e = Eliminator()
    for r in rows:
        e.add(r)
    return e.rank


def solve(rows: Sequence[int], target: int) -> int | None:
    """Find a subset of ``rows`` XOR-ing to ``target`` (as a bitmask over rows)."""
    e = Eliminator()
    for r in rows:
        e.add(r)
    return e.express(target)


def nullspace(rows: Sequence[int]) -> list[int]:
    """Basis of subsets of ``rows`` that XOR to zero."""
    e = Eliminator()
    out = []
    for i, r in enumerate(rows):
        red, combo = e.reduce(r)
        if red == 0:
            out.append(combo | (1 << i))
        e.add(r)
    return out


def solve_linear(columns: Sequence[int], rhs: int) -> int | None:
    """Solve ``A v = rhs`` where ``columns[j]`` is column j of A as a bit vector.

    Returns ``v`` as a bitmask over columns, or None when inconsistent.
    """
    return solve(columns, rhs)


def bits(v: int) -> list[int]:
    out = []
    while v:
        low = v & -v
        out.append(low.bit_length() - 1)
        v ^= low
    return out


def from_bits(idx) -> int:
    v = 0
    for i in idx:
        v ^= 1 << i
    return v
