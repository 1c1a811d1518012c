"""
Exact-rational LP oracle
Two-phase tableau simplex over Fractions with Bland's rule; slow, used to check the float engine
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import InvalidArgument
from .lp import LpProblem

logger = logging.getLogger(__name__)


@dataclass
class ExactResult:
    status: str
    value: Optional[Fraction]
    x: List[Fraction]
    pivots: int = 0


def _pivot(T: List[List[Fraction]], basis: List[int], i: int, j: int):
    row = T[i]
    piv = row[j]
    T[i] = row = [v / piv for v in row]
    for k, other in enumerate(T):
        if k == i:
            continue
        f = other[j]
        if f:
            T[k] = [a - f * b if b else a for a, b in zip(other, row)]
    basis[i] = j


def _simplex(T: List[List[Fraction]], basis: List[int], cost: List[Fraction], allowed: int) -> Tuple[str, int]:
    """Bland's rule: smallest improving column, ties in the ratio test by smallest basic index"""
    pivots = 0
    while True:
        in_basis = set(basis)
        priced = [(i, cost[b]) for i, b in enumerate(basis) if cost[b]]
        entering = None
        for j in range(allowed):
            if j in in_basis:
                continue
            reduced = cost[j] - sum(cb * T[i][j] for i, cb in priced)
            if reduced < 0:
                entering = j
                break
        if entering is None:
            return 'optimal', pivots

        leaving = None
        best = None
        for i, row in enumerate(T):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best, leaving = ratio, i
        if leaving is None:
            return 'unbounded', pivots
        _pivot(T, basis, leaving, entering)
        pivots += 1


def solve_exact(problem: LpProblem) -> ExactResult:
    """
    Solve an LpProblem exactly

    Float data is converted with Fraction(float), which is exact, so the
    oracle solves precisely the instance the float engine sees. Every
    variable needs a finite lower bound.

    Args:
        problem: The LP (minimization)

    Returns:
        ExactResult with status 'optimal', 'infeasible' or 'unbounded'
    """
    n = problem.num_variables
    A_ub, b_ub, A_eq, b_eq = problem.dense()
    c = [Fraction(float(v)) for v in problem.c]

    rows = [([Fraction(float(v)) for v in A_ub[i]], Fraction(float(b_ub[i])), False) for i in range(A_ub.shape[0])]
    rows += [([Fraction(float(v)) for v in A_eq[i]], Fraction(float(b_eq[i])), True) for i in range(A_eq.shape[0])]

    # Shift every variable to x = lower + y with y >= 0; finite uppers become rows.
    lowers = []
    constant = Fraction(0)
    for j, (lower, upper) in enumerate(problem.bounds):
        if lower is None or not math.isfinite(lower):
            raise InvalidArgument(f"Exact oracle needs a finite lower bound on variable {j}")
        lower = Fraction(float(lower))
        lowers.append(lower)
        if lower:
            rows = [(coeffs, rhs - coeffs[j] * lower, eq) for coeffs, rhs, eq in rows]
            constant += c[j] * lower
        if upper is not None and math.isfinite(upper):
            unit = [Fraction(0)] * n
            unit[j] = Fraction(1)
            rows.append((unit, Fraction(float(upper)) - lower, False))

    m = len(rows)
    n_slack = sum(1 for _, _, eq in rows if not eq)
    artificial = n + n_slack
    total = artificial + m

    T: List[List[Fraction]] = []
    basis: List[int] = []
    slack = n
    for i, (coeffs, rhs, eq) in enumerate(rows):
        row = list(coeffs) + [Fraction(0)] * (n_slack + m) + [rhs]
        if not eq:
            row[slack] = Fraction(1)
            slack += 1
        if rhs < 0:
            row = [-v for v in row]
        row[artificial + i] = Fraction(1)
        T.append(row)
        basis.append(artificial + i)

    phase_one = [Fraction(0)] * artificial + [Fraction(1)] * m
    _, pivots = _simplex(T, basis, phase_one, total)
    infeasibility = sum(phase_one[b] * T[i][-1] for i, b in enumerate(basis))
    if infeasibility > 0:
        return ExactResult(status='infeasible', value=None, x=[], pivots=pivots)

    # Drive zero-level artificials out of the basis; drop redundant rows.
    redundant = []
    for i in range(len(T)):
        if basis[i] >= artificial:
            for j in range(artificial):
                if T[i][j] != 0:
                    _pivot(T, basis, i, j)
                    pivots += 1
                    break
            else:
                redundant.append(i)
    for i in reversed(redundant):
        del T[i]
        del basis[i]

    phase_two = c + [Fraction(0)] * (n_slack + m)
    status, more = _simplex(T, basis, phase_two, artificial)
    pivots += more
    if status == 'unbounded':
        return ExactResult(status='unbounded', value=None, x=[], pivots=pivots)

    y = [Fraction(0)] * total
    for i, b in enumerate(basis):
        y[b] = T[i][-1]
    x = [y[j] + lowers[j] for j in range(n)]
    value = sum(c[j] * y[j] for j in range(n)) + constant
    logger.debug(f"Exact LP: {n} variables, {m} rows, {pivots} pivots, value {value}")
    return ExactResult(status='optimal', value=value, x=x, pivots=pivots)
