"""Sparse Gaussian elimination over the rationals.

Rows are ``{column: value}`` dicts of ints or Fractions.  Pivots follow a Markowitz-style rule
(shortest active row, then the column touching the fewest active rows), which
keeps fill-in tiny on line-sum systems where every row has few nonzeros.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

Col = Hashable


def _num(v):
    # ints stay ints so 0/1 systems avoid Fraction overhead until a division is inexact
    if isinstance(v, int):
        return v
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else v


def _div(a, b):
    if type(a) is int and type(b) is int and a % b == 0:
        return a // b
    return _num(Fraction(a) / b)


@dataclass
class Elimination:
    columns: tuple
    pivots: list  # (pivot column, row dict, rhs) in elimination order
    inconsistent: bool
    modulus: int | None = None

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def free_columns(self) -> list:
        pivoted = {c for c, _, _ in self.pivots}
        return [c for c in self.columns if c not in pivoted]

    @property
    def full_column_rank(self) -> bool:
        return self.rank == len(self.columns)

    def _back_substitute(self, x: dict, use_rhs: bool) -> dict:
        if self.modulus is not None:
            raise ValueError("back substitution needs a rational elimination")
        for col, row, rhs in reversed(self.pivots):
            acc = rhs if use_rhs else 0
            for c, a in row.items():
                if c != col:
                    acc -= a * x[c]
            x[col] = _div(acc, row[col])
        return {c: Fraction(v) for c, v in x.items()}

    def solution(self) -> dict:
        """A particular solution with every free column set to 0."""
        if self.inconsistent:
            raise ValueError("system is inconsistent")
        x = {c: 0 for c in self.free_columns}
        return self._back_substitute(x, True)

    def kernel_vector(self, free_col=None) -> dict:
        """Nonzero null-space vector with ``free_col`` = 1 (first free column by default)."""
        free = self.free_columns
        if not free:
            raise ValueError("full column rank: kernel is trivial")
        if free_col is None:
            free_col = free[0]
        x = {c: int(c == free_col) for c in free}
        return self._back_substitute(x, False)


def _mod(v, p: int) -> int:
    v = Fraction(v)
    return v.numerator * pow(v.denominator, -1, p) % p


def eliminate(rows: Sequence[Mapping[Col, object]], columns: Iterable[Col],
              rhs: Sequence[object] | None = None, modulus: int | None = None) -> Elimination:
    """Row-reduce ``rows`` (restricted to ``columns``) with optional right-hand side.

    With ``modulus`` set to a prime p the arithmetic is done in GF(p).  The
    rank mod p never exceeds the rational rank, so full column rank mod p
    proves full column rank over the rationals.
    """
    columns = tuple(columns)
    colset = set(columns)
    order = {c: t for t, c in enumerate(columns)}
    p = modulus
    conv = _num if p is None else (lambda v: _mod(v, p))
    R = [{c: conv(v) for c, v in r.items() if c in colset and v != 0} for r in rows]
    for r in R:
        for c in [c for c, v in r.items() if v == 0]:
            del r[c]
    b = [0] * len(R) if rhs is None else [conv(v) for v in rhs]
    col_rows: dict = {c: set() for c in columns}
    for rid, r in enumerate(R):
        for c in r:
            col_rows[c].add(rid)
    active = set()
    inconsistent = False
    heap = []
    for rid, r in enumerate(R):
        if r:
            active.add(rid)
            heap.append((len(r), rid))
        elif b[rid] != 0:
            inconsistent = True
    heapq.heapify(heap)
    pivots = []
    while heap:
        nnz, rid = heapq.heappop(heap)
        if rid not in active or nnz != len(R[rid]):
            continue
        prow = R[rid]
        col = min(prow, key=lambda c: (len(col_rows[c]), order[c]))
        active.discard(rid)
        for c in prow:
            col_rows[c].discard(rid)
        pv = prow[col]
        for other in list(col_rows[col]):
            r = R[other]
            f = _div(r[col], pv) if p is None else r[col] * pow(pv, -1, p) % p
            for c, a in prow.items():
                v = r.get(c, 0) - f * a
                if p is not None:
                    v %= p
                if v:
                    if c not in r:
                        col_rows[c].add(other)
                    r[c] = v
                elif c in r:
                    del r[c]
                    col_rows[c].discard(other)
            b[other] -= f * b[rid]
            if p is not None:
                b[other] %= p
            if r:
                heapq.heappush(heap, (len(r), other))
            else:
                active.discard(other)
                if b[other] != 0:
                    inconsistent = True
        pivots.append((col, prow, b[rid]))
    return Elimination(columns, pivots, inconsistent, p)


def rank(rows: Sequence[Mapping[Col, object]], columns: Iterable[Col],
         modulus: int | None = None) -> int:
    return eliminate(rows, columns, modulus=modulus).rank
