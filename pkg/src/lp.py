"""
Linear Programming Engine
Sparse LP assembly and the embedded float solver (HiGHS through scipy)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .config import Config
from .errors import SolverError

logger = logging.getLogger(__name__)

Bound = Tuple[float, Optional[float]]


@dataclass
class LpProblem:
    """minimize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, bounds[j][0] <= x_j <= bounds[j][1]"""

    c: np.ndarray
    A_ub: Optional[sparse.csr_matrix]
    b_ub: Optional[np.ndarray]
    A_eq: Optional[sparse.csr_matrix]
    b_eq: Optional[np.ndarray]
    bounds: List[Bound]
    labels: List[str] = field(default_factory=list)

    @property
    def num_variables(self) -> int:
        return len(self.c)

    def dense(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Dense copies of the constraint blocks (empty arrays when absent)"""
        n = self.num_variables
        A_ub = self.A_ub.toarray() if self.A_ub is not None else np.zeros((0, n))
        b_ub = self.b_ub if self.b_ub is not None else np.zeros(0)
        A_eq = self.A_eq.toarray() if self.A_eq is not None else np.zeros((0, n))
        b_eq = self.b_eq if self.b_eq is not None else np.zeros(0)
        return A_ub, b_ub, A_eq, b_eq


@dataclass
class LpResult:
    x: np.ndarray
    value: float
    status: str
    duality_gap: float
    iterations: int
    message: str = ''


class LpBuilder:
    """Accumulates variables and sparse rows, then emits an LpProblem"""

    def __init__(self):
        self._labels: List[str] = []
        self._bounds: List[Bound] = []
        self._cost: Dict[int, float] = {}
        self._ub_rows: List[Tuple[Dict[int, float], float]] = []
        self._eq_rows: List[Tuple[Dict[int, float], float]] = []

    def variable(self, label: str = '', lower: float = 0.0, upper: Optional[float] = None, cost: float = 0.0) -> int:
        index = len(self._bounds)
        self._labels.append(label)
        self._bounds.append((lower, upper))
        if cost:
            self._cost[index] = cost
        return index

    def less_equal(self, coefficients: Dict[int, float], rhs: float = 0.0):
        self._ub_rows.append((coefficients, rhs))

    def equal(self, coefficients: Dict[int, float], rhs: float = 0.0):
        self._eq_rows.append((coefficients, rhs))

    @staticmethod
    def _matrix(rows, n):
        if not rows:
            return None, None
        data, indices, indptr = [], [], [0]
        for coefficients, _ in rows:
            for j, v in sorted(coefficients.items()):
                if v != 0:
                    indices.append(j)
                    data.append(v)
            indptr.append(len(indices))
        matrix = sparse.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=int), np.array(indptr)),
                                   shape=(len(rows), n))
        return matrix, np.array([rhs for _, rhs in rows], dtype=float)

    def build(self) -> LpProblem:
        n = len(self._bounds)
        c = np.zeros(n)
        for j, v in self._cost.items():
            c[j] = v
        A_ub, b_ub = self._matrix(self._ub_rows, n)
        A_eq, b_eq = self._matrix(self._eq_rows, n)
        return LpProblem(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                         bounds=list(self._bounds), labels=list(self._labels))


def _dual_value(problem: LpProblem, result) -> float:
    """Dual objective assembled from the HiGHS marginals"""
    value = 0.0
    if problem.b_ub is not None:
        value += float(problem.b_ub @ result.ineqlin.marginals)
    if problem.b_eq is not None:
        value += float(problem.b_eq @ result.eqlin.marginals)
    for j, (lower, upper) in enumerate(problem.bounds):
        if lower is not None and math.isfinite(lower) and lower != 0:
            value += lower * result.lower.marginals[j]
        if upper is not None and math.isfinite(upper):
            value += upper * result.upper.marginals[j]
    return value


def solve_lp(problem: LpProblem, tolerance: Optional[float] = None, max_iterations: Optional[int] = None) -> LpResult:
    """
    Solve an LpProblem with HiGHS

    Args:
        problem: The LP (minimization)
        tolerance: Primal/dual feasibility tolerance (defaults to Config)
        max_iterations: Iteration cap; hitting it yields status 'cap-hit'

    Returns:
        LpResult with status 'optimal' when the certified duality gap is at most
        Config.DEFECT_SLACK, 'feasible-suboptimal' otherwise. The gap includes
        dual-weighted feasibility residuals, so it is compared with the slack,
        not with tolerance.
    """
    tol = Config.tolerance(tolerance)
    options = {'primal_feasibility_tolerance': tol, 'dual_feasibility_tolerance': tol}
    if max_iterations is not None:
        options['maxiter'] = max_iterations

    result = linprog(problem.c, A_ub=problem.A_ub, b_ub=problem.b_ub, A_eq=problem.A_eq, b_eq=problem.b_eq,
                     bounds=problem.bounds, method='highs', options=options)
    iterations = int(getattr(result, 'nit', 0) or 0)

    if result.status == 1:
        if result.x is None:
            raise SolverError(f"LP hit the iteration cap without a feasible point: {result.message}", status='cap-hit')
        logger.warning(f"LP hit the iteration cap after {iterations} iterations")
        return LpResult(x=np.asarray(result.x), value=float(result.fun), status='cap-hit',
                        duality_gap=math.inf, iterations=iterations, message=result.message)
    if result.status != 0:
        raise SolverError(f"LP failed (status {result.status}): {result.message}",
                          status={2: 'infeasible', 3: 'unbounded'}.get(result.status, 'numerical'))

    gap = abs(float(result.fun) - _dual_value(problem, result))
    slack = Config.DEFECT_SLACK
    status = 'optimal' if gap <= slack else 'feasible-suboptimal'
    if status != 'optimal':
        logger.warning(f"LP duality gap {gap:.3g} exceeds DAYFLOW_DEFECT_SLACK {slack:.3g} (tolerance {tol:.3g})")
    logger.debug(f"LP solved: {problem.num_variables} variables, value {result.fun:.12g}, gap {gap:.3g}")
    return LpResult(x=np.asarray(result.x), value=float(result.fun), status=status,
                    duality_gap=gap, iterations=iterations, message=result.message)
