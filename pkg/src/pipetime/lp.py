"""Exact-rational linear programming via a dense two-phase simplex.

Solves  maximize c.x  subject to  A.x <= b,  x >= 0  with all arithmetic in
`fractions.Fraction`; Bland's rule guarantees termination.  Problem sizes in
this package are tiny (tens of rows), so a dense tableau is plenty.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LpResult:
    status: str
    x: Optional[list[Fraction]]
    objective: Optional[Fraction]


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    for r, line in enumerate(tableau):
        if r != row and line[col] != 0:
            factor = line[col]
            tableau[r] = [v - factor * w for v, w in zip(line, tableau[row])]
    basis[row] = col


def _run_simplex(
    tableau: list[list[Fraction]],
    basis: list[int],
    cost: list[Fraction],
    banned: frozenset[int] = frozenset(),
) -> str:
    """Maximize; `cost` is the objective row in terms of all tableau columns
    (excluding rhs).  Columns in `banned` never enter the basis.  Mutates
    tableau/basis in place."""
    m = len(tableau)
    width = len(tableau[0]) - 1
    while True:
        # reduced costs: c_j - c_B . B^-1 A_j
        reduced = list(cost)
        for r in range(m):
            cb = cost[basis[r]]
            if cb != 0:
                row = tableau[r]
                for j in range(width):
                    if row[j] != 0:
                        reduced[j] -= cb * row[j]
        enter = -1
        for j in range(width):
            if j not in banned and reduced[j] > 0:
                enter = j
                break  # Bland: smallest index
        if enter < 0:
            return OPTIMAL
        leave = -1
        best: Optional[Fraction] = None
        for r in range(m):
            coeff = tableau[r][enter]
            if coeff > 0:
                ratio = tableau[r][width] / coeff
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best = ratio
                    leave = r
        if leave < 0:
            return UNBOUNDED
        _pivot(tableau, basis, leave, enter)


def maximize(objective: Sequence[Fraction], rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> LpResult:
    """Maximize objective.x subject to rows[i].x <= rhs[i] and x >= 0."""
    n = len(objective)
    m = len(rows)
    objective = [Fraction(v) for v in objective]
    # Equality form with one slack per row; rows with negative rhs are negated
    # (slack coefficient -1) and get an artificial variable for phase one.
    need_artificial = [rhs[i] < 0 for i in range(m)]
    n_art = sum(need_artificial)
    width = n + m + n_art
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    art_col = n + m
    for i in range(m):
        line = [Fraction(0)] * (width + 1)
        sign = -1 if need_artificial[i] else 1
        for j, a in enumerate(rows[i]):
            line[j] = sign * Fraction(a)
        line[n + i] = Fraction(sign)
        line[width] = sign * Fraction(rhs[i])
        if need_artificial[i]:
            line[art_col] = Fraction(1)
            basis.append(art_col)
            art_col += 1
        else:
            basis.append(n + i)
        tableau.append(line)

    if n_art:
        phase1 = [Fraction(0)] * width
        for j in range(n + m, width):
            phase1[j] = Fraction(-1)
        _run_simplex(tableau, basis, phase1)
        infeasibility = sum((tableau[r][width] for r in range(m) if basis[r] >= n + m), Fraction(0))
        if infeasibility > 0:
            return LpResult(INFEASIBLE, None, None)
        # Drive any degenerate artificial out of the basis.
        for r in range(m):
            if basis[r] >= n + m:
                for j in range(n + m):
                    if tableau[r][j] != 0:
                        _pivot(tableau, basis, r, j)
                        break

    cost = [Fraction(0)] * width
    for j in range(n):
        cost[j] = objective[j]
    status = _run_simplex(tableau, basis, cost, banned=frozenset(range(n + m, width)))
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None)
    x = [Fraction(0)] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = tableau[r][-1]
    value = sum((objective[j] * x[j] for j in range(n)), Fraction(0))
    return LpResult(OPTIMAL, x, value)
