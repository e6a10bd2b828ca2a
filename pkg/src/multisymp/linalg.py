"""Fraction-free Gaussian elimination over the field of scalar expressions.

Pivots are accepted only when the zero test certifies them NONZERO; entries
certified ZERO are skipped. Anything UNDECIDED downgrades the certainty of
the result instead of being silently treated as zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from .symexpr import ZeroTest, is_zero, normalize


@dataclass
class Echelon:
    rows: list[list[sp.Expr]]
    ncols: int  # coefficient columns; anything to the right is augmented data
    pivots: list[tuple[int, int]]
    certain: bool = True
    undecided_entries: list[tuple[int, int]] = field(default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def pivot_columns(self) -> list[int]:
        return [c for _, c in self.pivots]


def _zero_test(e: sp.Expr) -> ZeroTest:
    if e == 0:
        return ZeroTest.ZERO
    if e.is_Rational:
        return ZeroTest.NONZERO
    return is_zero(e)


def echelon(matrix: Sequence[Sequence], ncols: int | None = None) -> Echelon:
    """Bareiss elimination of ``matrix`` restricted to its first ``ncols`` columns.

    Columns past ``ncols`` ride along (augmented right-hand sides).
    """
    rows = [[normalize(sp.sympify(x)) for x in row] for row in matrix]
    nrows = len(rows)
    width = len(rows[0]) if rows else 0
    ncols = width if ncols is None else ncols
    pivots: list[tuple[int, int]] = []
    certain = True
    undecided: list[tuple[int, int]] = []
    prev = sp.Integer(1)
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        choice = None
        for i in range(r, nrows):
            t = _zero_test(rows[i][c])
            if t is ZeroTest.ZERO:
                rows[i][c] = sp.Integer(0)
            elif t is ZeroTest.NONZERO:
                if choice is None or sp.count_ops(rows[i][c]) < sp.count_ops(rows[choice][c]):
                    choice = i
            else:
                certain = False
                undecided.append((i, c))
        if choice is None:
            continue
        rows[r], rows[choice] = rows[choice], rows[r]
        p = rows[r][c]
        for i in range(r + 1, nrows):
            a = rows[i][c]
            if a == 0:
                rows[i] = [normalize(x * p / prev) for x in rows[i]]
                continue
            rows[i] = [normalize((p * rows[i][j] - a * rows[r][j]) / prev) for j in range(width)]
            rows[i][c] = sp.Integer(0)
        pivots.append((r, c))
        prev = p
        r += 1
    return Echelon(rows, ncols, pivots, certain, undecided)


def rank(matrix: Sequence[Sequence]) -> tuple[int, bool]:
    """Generic rank and whether every pivot decision was certified."""
    if not matrix or not matrix[0]:
        return 0, True
    ech = echelon(matrix)
    return ech.rank, ech.certain


@dataclass
class Solution:
    """Particular solution (free unknowns set to zero) plus diagnostics."""

    values: list[sp.Expr] | None
    consistent: ZeroTest  # ZERO: consistent, NONZERO: inconsistent
    rank: int
    certain: bool
    free_columns: list[int]
    residuals: list[tuple[int, sp.Expr]]  # rows outside the pivots with their rhs


def _back_substitute(ech: Echelon, rhs_col: int | None, free_values: dict[int, sp.Expr]) -> list[sp.Expr]:
    x: list[sp.Expr] = [sp.Integer(0)] * ech.ncols
    for c, v in free_values.items():
        x[c] = v
    for r, c in reversed(ech.pivots):
        row = ech.rows[r]
        acc = row[rhs_col] if rhs_col is not None else sp.Integer(0)
        for j in range(c + 1, ech.ncols):
            if row[j] != 0 and x[j] != 0:
                acc -= row[j] * x[j]
        x[c] = normalize(acc / row[c])
    return x


def solve(matrix: Sequence[Sequence], rhs: Sequence) -> Solution:
    """Solve ``matrix @ x = rhs`` over the expression field."""
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    n = len(matrix[0]) if matrix else 0
    if not aug:
        return Solution([sp.Integer(0)] * n, ZeroTest.ZERO, 0, True, list(range(n)), [])
    ech = echelon(aug, ncols=n)
    pivot_rows = {r for r, _ in ech.pivots}
    residuals = [(i, ech.rows[i][n]) for i in range(len(aug)) if i not in pivot_rows]
    verdict = ZeroTest.combine(_zero_test(res) for _, res in residuals)
    free = [c for c in range(n) if c not in ech.pivot_columns]
    values = None
    if verdict is not ZeroTest.NONZERO:
        values = _back_substitute(ech, n, {})
    return Solution(values, verdict, ech.rank, ech.certain, free,
                    [(i, res) for i, res in residuals if res != 0])


def nullspace(matrix: Sequence[Sequence], ncols: int | None = None) -> tuple[list[list[sp.Expr]], bool]:
    """Basis of the right kernel and whether the rank decision was certified."""
    if not matrix:
        n = ncols or 0
        return [[sp.Integer(int(i == j)) for i in range(n)] for j in range(n)], True
    ech = echelon(matrix)
    basis = []
    for f in range(ech.ncols):
        if f in ech.pivot_columns:
            continue
        basis.append(_back_substitute(ech, None, {f: sp.Integer(1)}))
    return basis, ech.certain


def substitute(matrix: Sequence[Sequence], point: dict) -> list[list[sp.Expr]]:
    return [[sp.sympify(x).xreplace(point) for x in row] for row in matrix]
