"""Exact sparse row reduction over the rationals.

Rows are ``{column: Fraction}`` dicts.  Pivots are always taken at the
smallest column of a row, so after :meth:`RowEchelon.reduce` every pivot
row is zero in every other pivot column, i.e. the system is in reduced
row-echelon form with respect to the column order.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = ["RowEchelon", "nullspace", "rank"]


class RowEchelon:
    def __init__(self) -> None:
        self.pivots: dict[int, dict[int, Fraction]] = {}
        self._reduced = True

    def add_row(self, row: Mapping[int, Fraction]) -> bool:
        """Insert a row; returns True if it increased the rank."""
        r = {c: Fraction(v) for c, v in row.items() if v}
        if not r:
            return False
        heap = list(r)
        heapq.heapify(heap)
        seen = set()
        while heap:
            c = heapq.heappop(heap)
            if c in seen:
                continue
            seen.add(c)
            a = r.get(c)
            if not a:
                continue
            prow = self.pivots.get(c)
            if prow is None:
                continue
            for cc, v in prow.items():
                nv = r.get(cc, 0) - a * v
                if nv:
                    if cc not in r:
                        heapq.heappush(heap, cc)
                    r[cc] = nv
                else:
                    r.pop(cc, None)
        if not r:
            return False
        lead = min(r)
        inv = 1 / r[lead]
        self.pivots[lead] = {c: v * inv for c, v in r.items()}
        self._reduced = False
        return True

    def reduce(self) -> None:
        """Back-substitute so pivot rows vanish in all other pivot columns."""
        if self._reduced:
            return
        for p in sorted(self.pivots, reverse=True):
            row = self.pivots[p]
            for c in sorted(c for c in row if c != p and c in self.pivots):
                a = row.get(c)
                if not a:
                    continue
                for cc, v in self.pivots[c].items():
                    nv = row.get(cc, 0) - a * v
                    if nv:
                        row[cc] = nv
                    else:
                        row.pop(cc, None)
        self._reduced = True

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def nullspace(self, ncols: int) -> list[dict[int, Fraction]]:
        """Basis of the solution space, one vector per free column.

        The vector for free column ``j`` has coefficient 1 at ``j`` and its
        other entries only at pivot columns smaller than ``j``.
        """
        self.reduce()
        free = [j for j in range(ncols) if j not in self.pivots]
        by_col: dict[int, list[tuple[int, Fraction]]] = {}
        for p, row in self.pivots.items():
            for c, v in row.items():
                if c != p:
                    by_col.setdefault(c, []).append((p, v))
        basis = []
        for j in free:
            vec = {j: Fraction(1)}
            for p, v in by_col.get(j, ()):
                vec[p] = -v
            basis.append(dict(sorted(vec.items())))
        return basis


def nullspace(rows: Iterable[Mapping[int, Fraction]], ncols: int) -> list[dict[int, Fraction]]:
    ech = RowEchelon()
    for r in rows:
        ech.add_row(r)
    return ech.nullspace(ncols)


def rank(rows: Iterable[Mapping[int, Fraction]]) -> int:
    ech = RowEchelon()
    for r in rows:
        ech.add_row(r)
    return ech.rank


def dense_rows(matrix: Sequence[Sequence[Fraction]]) -> list[dict[int, Fraction]]:
    return [{j: Fraction(v) for j, v in enumerate(row) if v} for row in matrix]
