"""Exact linear algebra over the rationals."""
from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence


def _integer_rows(rows: Sequence[Sequence]) -> list[list[int]]:
    out = []
    for row in rows:
        row = [Fraction(v) for v in row]
        d = lcm(*(v.denominator for v in row)) if row else 1
        out.append([v.numerator * (d // v.denominator) for v in row])
    return out


def rational_rank(matrix: Sequence[Sequence]) -> int:
    """Rank by fraction-free (Bareiss) elimination on integer-scaled rows."""
    a = _integer_rows(matrix)
    if not a or not a[0]:
        return 0
    nrows, ncols = len(a), len(a[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        if rank == nrows:
            break
        piv = next((r for r in range(rank, nrows) if a[r][col]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][col]
        for r in range(rank + 1, nrows):
            ar = a[r]
            f = ar[col]
            for c in range(col + 1, ncols):
                # exact by Sylvester's identity
                ar[c] = (p * ar[c] - f * a[rank][c]) // prev
            ar[col] = 0
        prev = p
        rank += 1
    return rank


def in_span(vectors: Sequence[Sequence], v: Sequence) -> bool:
    """``v`` lies in the span of ``vectors`` (rank comparison)."""
    vectors = list(vectors)
    if not vectors:
        return all(x == 0 for x in v)
    return rational_rank(vectors + [list(v)]) == rational_rank(vectors)


class RowSpace:
    """Incrementally grown span of rational vectors, kept in reduced echelon form."""

    def __init__(self, n: int):
        self.n = n
        self._rows: list[tuple[int, list[Fraction]]] = []  # (pivot column, row)

    @property
    def dim(self) -> int:
        return len(self._rows)

    @property
    def full(self) -> bool:
        return self.dim == self.n

    def _reduce(self, v: Sequence) -> list[Fraction]:
        w = [Fraction(x) for x in v]
        if len(w) != self.n:
            raise ValueError(f"expected a vector of length {self.n}")
        for col, row in self._rows:
            f = w[col]
            if f:
                for j in range(self.n):
                    if row[j]:
                        w[j] -= f * row[j]
        return w

    def contains(self, v: Sequence) -> bool:
        return not any(self._reduce(v))

    def add(self, v: Sequence) -> bool:
        """Add ``v``; True when the dimension grew."""
        w = self._reduce(v)
        col = next((j for j, x in enumerate(w) if x), None)
        if col is None:
            return False
        p = w[col]
        w = [x / p for x in w]
        for _, row in self._rows:
            f = row[col]
            if f:
                for j in range(self.n):
                    row[j] -= f * w[j]
        self._rows.append((col, w))
        return True

    def copy(self) -> "RowSpace":
        out = RowSpace(self.n)
        out._rows = [(c, list(r)) for c, r in self._rows]
        return out
