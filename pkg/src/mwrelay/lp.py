"""Exact-rational linear programming via two-phase simplex.

Solves  min c.x  subject to  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0,
entirely in Fractions (Bland's rule, so no cycling and no tolerances).
Problems here are tiny, so a dense tableau is plenty.

Dual values are reported for the original rows at optimality: ``dual_eq``
is sign-free, ``dual_ub`` is nonpositive, and together they satisfy
A_eq^T u + A_ub^T v <= c componentwise with u.b_eq + v.b_ub = value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list[Fraction] | None = None
    value: Fraction | None = None
    dual_eq: list[Fraction] | None = None
    dual_ub: list[Fraction] | None = None


def _pivot(tab: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    for i, r in enumerate(tab):
        if i != row and r[col] != 0:
            f = r[col]
            tab[i] = [a - f * b for a, b in zip(r, tab[row])]
    basis[row] = col


def _simplex(
    tab: list[list[Fraction]],
    basis: list[int],
    cost: list[Fraction],
    allowed: list[bool],
) -> str:
    """Minimize cost over the tableau in place; Bland's rule."""
    m = len(tab)
    n = len(cost)
    while True:
        # Reduced costs relative to the current basis.
        y = [cost[basis[i]] for i in range(m)]
        entering = -1
        for j in range(n):
            if not allowed[j] or j in basis:
                continue
            red = cost[j] - sum(y[i] * tab[i][j] for i in range(m))
            if red < 0:
                entering = j
                break
        if entering < 0:
            return "optimal"
        leaving = -1
        best = None
        for i in range(m):
            a = tab[i][entering]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded"
        _pivot(tab, basis, leaving, entering)


def solve_lp(c, a_eq, b_eq, a_ub, b_ub) -> LpResult:
    c = [Fraction(v) for v in c]
    a_eq = [[Fraction(v) for v in row] for row in a_eq]
    b_eq = [Fraction(v) for v in b_eq]
    a_ub = [[Fraction(v) for v in row] for row in a_ub]
    b_ub = [Fraction(v) for v in b_ub]
    n = len(c)
    n_eq, n_ub = len(a_eq), len(a_ub)
    m = n_eq + n_ub

    # Standard form: [A_eq 0; A_ub I][x; s] = [b_eq; b_ub], then flip
    # rows to nonnegative rhs and append one artificial per row.
    rows = []
    flips = []
    for i in range(n_eq):
        row = list(a_eq[i]) + [Fraction(0)] * n_ub + [b_eq[i]]
        rows.append(row)
    for i in range(n_ub):
        slack = [Fraction(0)] * n_ub
        slack[i] = Fraction(1)
        rows.append(list(a_ub[i]) + slack + [b_ub[i]])
    for i in range(m):
        if rows[i][-1] < 0:
            rows[i] = [-v for v in rows[i]]
            flips.append(Fraction(-1))
        else:
            flips.append(Fraction(1))

    width = n + n_ub
    tab = []
    for i in range(m):
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        tab.append(rows[i][:width] + art + [rows[i][-1]])
    total = width + m
    basis = [width + i for i in range(m)]

    # Phase I: drive the artificial variables to zero.
    cost1 = [Fraction(0)] * width + [Fraction(1)] * m
    allowed = [True] * total
    status = _simplex(tab, basis, cost1, allowed)
    assert status == "optimal", "phase-I cannot be unbounded"
    phase1 = sum(cost1[basis[i]] * tab[i][-1] for i in range(m))
    if phase1 > 0:
        return LpResult("infeasible")

    # Forbid artificials from re-entering; basic ones stay at value 0.
    for j in range(width, total):
        allowed[j] = False

    cost2 = list(c) + [Fraction(0)] * n_ub + [Fraction(0)] * m
    status = _simplex(tab, basis, cost2, allowed)
    if status == "unbounded":
        return LpResult("unbounded")

    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = tab[i][-1]
    value = sum(ci * xi for ci, xi in zip(c, x))

    # Duals from the final basis: y solves y.B = c_B over the flipped
    # standard-form rows; the artificial block of the tableau holds the
    # running inverse of the initial basis, so y = c_B . tab[:, art].
    y = [
        sum(cost2[basis[i]] * tab[i][width + r] for i in range(len(tab)))
        for r in range(m)
    ]
    y = [y[r] * flips[r] for r in range(m)]
    dual_eq = y[:n_eq]
    dual_ub = y[n_eq:]
    return LpResult("optimal", x, value, dual_eq, dual_ub)
