"""
Test Functions
Bounded functions on a group given by finite support plus a default value,
their translates, pseudometrics, and the invariance-defect seminorms
"""

import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from .config import Config
from .errors import InvalidArgument, PreconditionViolation, ResourceLimit, UnsupportedOperation
from .groups import Element, GroupSpec
from .lp import LpBuilder, solve_lp
from .measures import MolecularMeasure, convolve_left, evaluate

if TYPE_CHECKING:
    from .actions import AffineAction

logger = logging.getLogger(__name__)


class TestFunction:
    """
    A bounded function on a group: explicit values on a finite support, a
    default value everywhere else
    """

    __test__ = False  # not a pytest class

    def __init__(self, spec: GroupSpec, values: Optional[Mapping[Element, float]] = None, default: float = 0.0):
        values = values or {}
        spec.check(*values)
        self.spec = spec
        self.default = float(default)
        self._values = MappingProxyType({g: float(v) for g, v in values.items()})
        self.sup_bound = max([abs(self.default)] + [abs(v) for v in self._values.values()])

    @property
    def values(self) -> Mapping[Element, float]:
        return self._values

    @property
    def support(self) -> List[Element]:
        return sorted(self._values)

    def __call__(self, g: Element) -> float:
        return self._values.get(g, self.default)

    def __repr__(self) -> str:
        return f"TestFunction({self.spec.key}; {len(self._values)} values, default {self.default:g})"


def constant(spec: GroupSpec, value: float = 1.0) -> TestFunction:
    return TestFunction(spec, {}, default=value)


def indicator(elements: Iterable[Element], spec: Optional[GroupSpec] = None) -> TestFunction:
    """Indicator function of a finite set (default 0)"""
    elements = list(elements)
    if spec is None:
        if not elements:
            raise InvalidArgument("An empty indicator needs an explicit spec")
        spec = elements[0].spec
    return TestFunction(spec, {g: 1.0 for g in elements}, default=0.0)


def left_translate(s: Element, f: TestFunction) -> TestFunction:
    """
    The left translate t -> f(s t)

    Needs inverses, since the support moves to s^-1 supp(f). On a semigroup
    use evaluate(convolve_left(s, mu), f) instead, which equals
    evaluate(mu, left_translate(s, f)) whenever the latter exists.
    """
    f.spec.check(s)
    if not f.spec.has_inverses:
        raise UnsupportedOperation(
            f"left_translate needs inverses; on {f.spec.key} evaluate s*mu against f directly"
        )
    s_inv = f.spec.invert(s)
    return TestFunction(f.spec, {f.spec.multiply(s_inv, u): v for u, v in f.values.items()}, f.default)


def right_translate(s: Element, f: TestFunction) -> TestFunction:
    """The right translate t -> f(t s)"""
    f.spec.check(s)
    if not f.spec.has_inverses:
        raise UnsupportedOperation(
            f"right_translate needs inverses; on {f.spec.key} evaluate mu*s against f directly"
        )
    s_inv = f.spec.invert(s)
    return TestFunction(f.spec, {f.spec.multiply(u, s_inv): v for u, v in f.values.items()}, f.default)


# --- metrics ---------------------------------------------------------------------------------


class MetricTable:
    """Finite pseudometric: a symmetric distance matrix over listed points"""

    def __init__(self, points: Sequence[Element], matrix: np.ndarray):
        self.points = tuple(points)
        self.matrix = np.asarray(matrix, dtype=float)
        self.index = {g: i for i, g in enumerate(self.points)}
        if self.matrix.shape != (len(self.points), len(self.points)):
            raise InvalidArgument(f"Metric matrix shape {self.matrix.shape} does not match {len(self.points)} points")

    def distance(self, x: Element, y: Element) -> float:
        try:
            return float(self.matrix[self.index[x], self.index[y]])
        except KeyError as e:
            raise PreconditionViolation(f"Point {e.args[0]!r} is outside the metric table")


def pseudometric_from_family(family: Sequence[TestFunction], points: Sequence[Element]) -> MetricTable:
    """
    rho(s, t) = max over f in the family of |f(s) - f(t)|, tabulated on `points`

    Args:
        family: Finite family of test functions with sup bound <= 1
        points: Points to tabulate
    """
    for f in family:
        if f.sup_bound > 1.0:
            raise InvalidArgument(f"Family members need sup bound <= 1 (got {f.sup_bound:g})")
    points = sorted(set(points))
    if not family:
        return MetricTable(points, np.zeros((len(points), len(points))))
    values = np.array([[f(p) for p in points] for f in family])
    matrix = np.abs(values[:, :, None] - values[:, None, :]).max(axis=0)
    return MetricTable(points, matrix)


def word_metric_table(spec: GroupSpec, points: Sequence[Element]) -> MetricTable:
    """Word metric tabulated on `points` (symmetrized for semigroups)"""
    points = sorted(set(points))
    matrix = np.zeros((len(points), len(points)))
    for i, x in enumerate(points):
        for j in range(i + 1, len(points)):
            y = points[j]
            d = spec.word_metric(x, y)
            if not spec.has_inverses:
                d = min(d, spec.word_metric(y, x))
            matrix[i, j] = matrix[j, i] = d
    return MetricTable(points, matrix)


@dataclass
class LipschitzBallSpec:
    """
    The test set {f : |f| <= sup_cap, |f(x) - f(y)| <= lipschitz_cap * rho(x, y)}

    `metric` is 'word' (word metric of the group), 'discrete' (rho = 2 off
    the diagonal, so at unit caps the ball is the whole unit ball of
    l-infinity and the defect is the TV defect), 'unit' (rho = 1 off the
    diagonal) or an explicit MetricTable.
    """

    metric: Union[str, MetricTable] = 'word'
    sup_cap: float = 1.0
    lipschitz_cap: float = 1.0

    def __post_init__(self):
        if self.sup_cap <= 0 or self.lipschitz_cap <= 0:
            raise InvalidArgument(f"Lipschitz ball caps must be positive "
                                  f"(got sup {self.sup_cap}, Lipschitz {self.lipschitz_cap})")
        if isinstance(self.metric, str) and self.metric not in ('word', 'discrete', 'unit'):
            raise InvalidArgument(f"Unknown metric {self.metric!r} (expected 'word', 'discrete', 'unit' or a MetricTable)")

    @property
    def reach(self) -> float:
        """Distances at or beyond this make the Lipschitz constraint redundant"""
        return 2.0 * self.sup_cap / self.lipschitz_cap

    def distance(self, spec: GroupSpec, x: Element, y: Element) -> float:
        if x == y:
            return 0.0
        if isinstance(self.metric, MetricTable):
            return self.metric.distance(x, y)
        if self.metric == 'discrete':
            return 2.0
        if self.metric == 'unit':
            return 1.0
        limit = int(self.reach)
        d = spec.word_metric(x, y, limit)
        if not spec.has_inverses:
            d = min(d, spec.word_metric(y, x, limit))
        return float(d)

    def describe(self) -> str:
        name = self.metric if isinstance(self.metric, str) else 'table'
        return f"blip[{name}, sup<={self.sup_cap:g}, lip<={self.lipschitz_cap:g}]"


# --- defects ---------------------------------------------------------------------------------


def defect_weak(mu: MolecularMeasure, s: Element, family: Sequence[TestFunction]) -> float:
    """max over f in the family of |mu(f) - (s*mu)(f)|"""
    shifted = convolve_left(s, mu)
    return max((abs(evaluate(mu, f) - evaluate(shifted, f)) for f in family), default=0.0)


@dataclass
class BlipResult:
    value: float
    witness: TestFunction
    points: List[Element]
    duality_gap: float


def blip_witness(nu: MolecularMeasure, ball_spec: LipschitzBallSpec,
                 extra_points: Iterable[Element] = (), tolerance: Optional[float] = None) -> BlipResult:
    """
    sup of |nu(f)| over the Lipschitz ball, as an exact finite LP

    The variables are the values of f on supp(nu) plus `extra_points`;
    the box and the pairwise Lipschitz constraints make the feasible set
    symmetric under f -> -f, so maximizing nu(f) gives the sup of |nu(f)|.

    Args:
        nu: Signed measure (typically mu - s*mu)
        ball_spec: Caps and metric
        extra_points: Additional points carrying f-values (zero mass)
        tolerance: LP tolerance (defaults to Config)

    Returns:
        BlipResult with the optimal value and the maximizing test function
    """
    spec = nu.spec
    points = sorted(set(nu.support) | set(extra_points))
    if len(points) > Config.cap():
        raise ResourceLimit(f"Lipschitz LP over {len(points)} points exceeds the enumeration cap")
    if not points:
        return BlipResult(0.0, constant(spec, 0.0), [], 0.0)

    cap = ball_spec.sup_cap
    builder = LpBuilder()
    columns = [builder.variable(f"f[{i}]", lower=-cap, upper=cap, cost=-nu.coefficient(p))
               for i, p in enumerate(points)]
    edges = 0
    for i, x in enumerate(points):
        for j in range(i + 1, len(points)):
            weight = ball_spec.lipschitz_cap * ball_spec.distance(spec, x, points[j])
            if weight < 2.0 * cap:
                builder.less_equal({columns[i]: 1.0, columns[j]: -1.0}, weight)
                builder.less_equal({columns[j]: 1.0, columns[i]: -1.0}, weight)
                edges += 1

    result = solve_lp(builder.build(), tolerance)
    value = max(0.0, -result.value)
    witness = TestFunction(spec, {p: float(result.x[c]) for p, c in zip(points, columns)}, default=0.0)
    logger.debug(f"Bounded-Lipschitz LP: {len(points)} points, {edges} active pairs, value {value:.12g}")
    return BlipResult(value, witness, points, result.duality_gap)


def defect_blip(mu: MolecularMeasure, s: Element, ball_spec: LipschitzBallSpec,
                extra_points: Iterable[Element] = (), tolerance: Optional[float] = None) -> float:
    """Bounded-Lipschitz distance between mu and s*mu"""
    return blip_witness(mu - convolve_left(s, mu), ball_spec, extra_points, tolerance).value


def pullback_functional(xi: Sequence[float], action: 'AffineAction', x0: Sequence[float], radius: int,
                        cap: Optional[int] = None, bound: Optional[float] = None) -> TestFunction:
    """
    The test function t -> xi(t . x0), materialized on ball(radius)

    Args:
        xi: Linear functional, as a coefficient vector
        action: Affine action
        x0: Base point of the orbit
        radius: Ball on which values are stored; the default value is xi(x0)
        cap: Enumeration cap (defaults to Config)
        bound: Orbit sup-norm ceiling (defaults to Config)

    Returns:
        TestFunction on the action's group
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (action.dimension,):
        raise InvalidArgument(f"Functional has dimension {xi.shape}, action has {action.dimension}")
    bound = Config.ORBIT_BOUND if bound is None else bound
    orbit = action.orbit(x0, radius, cap)
    largest = max(float(np.max(np.abs(p))) if p.size else 0.0 for p in orbit.values())
    if largest > bound:
        raise PreconditionViolation(
            f"Orbit of x0 reaches sup norm {largest:.6g} > {bound:.6g}; the orbit map is not bounded"
        )
    return TestFunction(action.group, {g: float(xi @ p) for g, p in orbit.items()},
                        default=float(xi @ np.asarray(x0, dtype=float)))


# --- JSON ------------------------------------------------------------------------------------


def testfunction_to_json(f: TestFunction) -> Dict[str, Any]:
    return {
        'default': f.default,
        'values': [{'element': f.spec.serialize_element(g), 'value': f(g)} for g in f.support],
    }


def testfunction_from_json(data: Dict[str, Any], spec: GroupSpec) -> TestFunction:
    if not isinstance(data, dict):
        raise InvalidArgument(f"A test function must be a JSON object (got {type(data).__name__})")
    try:
        values = {spec.parse_element(entry['element']): float(entry['value']) for entry in data.get('values', [])}
    except (KeyError, TypeError) as e:
        raise InvalidArgument(f"Malformed test function: {e}")
    return TestFunction(spec, values, default=float(data.get('default', 0.0)))
