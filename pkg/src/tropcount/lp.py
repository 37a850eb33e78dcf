"""Exact rational feasibility for open polyhedral cones.

The moduli assembly needs two primitives: decide whether a cone
{y : B y >= 0} has a point with every inequality strict, and if so hand
back such a point. Since the region is a cone, strict feasibility is
equivalent to feasibility of B y >= 1, which a small dense phase-I
simplex over Fraction settles exactly. Bland's rule keeps it from
cycling; the systems involved are tiny (tens of rows/columns).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

Row = Sequence[Fraction]


def _phase_one(a: list[list[Fraction]], b: list[Fraction]) -> Optional[list[Fraction]]:
    """Find x >= 0 with A x = b (b >= 0 assumed), or None."""
    m = len(a)
    n = len(a[0]) if m else 0
    # Tableau columns: n structural + m artificial + rhs.
    tab = [a[i][:] + [Fraction(1) if j == i else Fraction(0) for j in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    # Objective: minimize sum of artificials; keep reduced costs explicitly.
    cost = [Fraction(0)] * (n + m) + [Fraction(0)]
    for j in range(n + m):
        cost[j] = -sum(tab[i][j] for i in range(m))
    cost[n + m] = -sum(b)
    for j in range(n, n + m):
        cost[j] += 1

    while True:
        enter = next((j for j in range(n + m) if cost[j] < 0), None)
        if enter is None:
            break
        # Ratio test with Bland's rule on ties.
        leave = None
        best: Optional[Fraction] = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][-1] / tab[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            # Unbounded phase-I objective cannot happen; defensive.
            return None
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[leave])]
        if cost[enter] != 0:
            f = cost[enter]
            cost = [x - f * y for x, y in zip(cost, tab[leave] + [])]
        basis[leave] = enter

    if cost[-1] != 0:
        return None
    x = [Fraction(0)] * n
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = tab[i][-1]
        elif tab[i][-1] != 0:
            return None
    return x


def strict_point(rows: list[list[Fraction]], dim: int) -> Optional[list[Fraction]]:
    """A point y with row·y >= 1 for every row, or None if {row·y > 0} is empty.

    ``rows`` may be empty, in which case the origin (of the given dimension)
    works vacuously only when dim is 0; otherwise any point does and we
    return the zero vector.
    """
    if not rows:
        return [Fraction(0)] * dim
    # y = u - w with u, w >= 0; slacks s >= 0: B u - B w - s = 1.
    m = len(rows)
    a = []
    for r in rows:
        a.append([Fraction(x) for x in r] + [-Fraction(x) for x in r] + [
            Fraction(-1) if j == len(a) else Fraction(0) for j in range(m)
        ])
    b = [Fraction(1)] * m
    sol = _phase_one(a, b)
    if sol is None:
        return None
    return [sol[j] - sol[dim + j] for j in range(dim)]
