"""
Invariant Mean Solver
Finds molecular means on a Cayley ball minimizing the worst generator defect,
Følner baselines, defect profiles and Day convexification
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from .actions import AffineAction, residuals
from .config import Config
from .errors import InvalidArgument, PreconditionViolation, ResourceLimit, UnsupportedOperation
from .groups import Element, GroupSpec, ZdGroup
from .lp import LpBuilder, LpProblem, solve_lp
from .measures import MolecularMeasure, convolve_left, measure_to_json, tv_norm, uniform
from .testfn import LipschitzBallSpec, TestFunction, defect_blip, defect_weak, indicator

logger = logging.getLogger(__name__)

DEFECT_KINDS = ('tv', 'blip', 'weak')


@dataclass
class SolveConfig:
    """
    Settings for one invariant-mean solve

    kind 'blip' uses ball_spec (default: word metric, both caps 1); kind
    'weak' uses family (default: indicators of the balls of radius 0..r).
    """

    radius: int
    kind: str = 'tv'
    ball_spec: Optional[LipschitzBallSpec] = None
    family: Optional[Sequence[TestFunction]] = None
    tolerance: Optional[float] = None
    generators: Optional[Sequence[str]] = None
    cap: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.radius, bool) or not isinstance(self.radius, int) or self.radius < 0:
            raise InvalidArgument(f"Radius must be a nonnegative integer (got {self.radius!r})")
        if self.kind not in DEFECT_KINDS:
            raise InvalidArgument(f"Unknown defect kind {self.kind!r} (expected one of {', '.join(DEFECT_KINDS)})")
        if self.tolerance is not None and self.tolerance <= 0:
            raise InvalidArgument(f"Tolerance must be positive (got {self.tolerance})")
        if self.kind == 'blip' and self.ball_spec is None:
            self.ball_spec = LipschitzBallSpec()

    def generator_elements(self, spec: GroupSpec) -> Dict[str, Element]:
        names = spec.generator_names if self.generators is None else list(self.generators)
        return {name: spec.generator(name) for name in names}

    def test_family(self, spec: GroupSpec) -> List[TestFunction]:
        if self.family is not None:
            return list(self.family)
        return default_family(spec, self.radius, self.cap)

    def describe(self) -> str:
        if self.kind == 'blip':
            return self.ball_spec.describe()
        return self.kind


@dataclass
class DefectReport:
    measure: MolecularMeasure
    per_generator: Dict[str, float]
    radius: int
    kind: str
    lp_status: str
    lp_value: float
    duality_gap: float
    wall_time: float = 0.0

    @property
    def max_defect(self) -> float:
        return max(self.per_generator.values(), default=0.0)

    def to_json(self, prune: float = 0.0) -> Dict[str, Any]:
        return {
            'group': self.measure.spec.to_json(),
            'radius': self.radius,
            'kind': self.kind,
            'lp_status': self.lp_status,
            'lp_value': self.lp_value,
            'duality_gap': self.duality_gap,
            'max_defect': self.max_defect,
            'per_generator': dict(self.per_generator),
            'measure': measure_to_json(self.measure, prune),
        }


@dataclass
class DefectLp:
    """An LP instance together with the ball whose masses are its first columns"""

    problem: LpProblem
    support: List[Element]
    objective_column: int
    generators: Dict[str, Element] = field(default_factory=dict)

    @property
    def num_mean_columns(self) -> int:
        return len(self.support)


# --- baselines -------------------------------------------------------------------------------


def folner_uniform(spec: GroupSpec, r: int, cap: Optional[int] = None) -> MolecularMeasure:
    """Uniform mean on ball(r)"""
    return uniform(spec.ball(r, cap))


def box_mean(spec: GroupSpec, n: int) -> MolecularMeasure:
    """Uniform mean on the box {0..n-1}^d of Z^d"""
    if not isinstance(spec, ZdGroup):
        raise InvalidArgument(f"Box means live on Z^d (got {spec.key})")
    if n < 1:
        raise InvalidArgument(f"Box side must be positive (got {n})")
    if n ** spec.d > Config.cap():
        raise ResourceLimit(f"Box of side {n} in {spec.key} exceeds the enumeration cap")
    corners = np.stack(np.meshgrid(*[np.arange(n)] * spec.d, indexing='ij'), axis=-1).reshape(-1, spec.d)
    return uniform(spec.element(tuple(int(v) for v in row)) for row in corners)


def exact_invariant_mean(spec: GroupSpec, cap: Optional[int] = None) -> MolecularMeasure:
    """Uniform mean on a finite group, invariant under every element"""
    if not spec.is_finite:
        raise UnsupportedOperation(f"{spec.key} is infinite; it has no finitely supported invariant mean")
    return uniform(spec.elements(cap))


def default_family(spec: GroupSpec, r: int, cap: Optional[int] = None) -> List[TestFunction]:
    """Indicators of the balls of radius 0..r"""
    tree = spec.ball_tree(r, cap)
    return [indicator([g for g, entry in tree.items() if entry[2] <= k], spec) for k in range(r + 1)]


# --- defects ---------------------------------------------------------------------------------


def tv_defect(mu: MolecularMeasure, s: Element) -> float:
    """|mu - s*mu| in total variation"""
    return tv_norm(mu - convolve_left(s, mu))


def word_defect(mu: MolecularMeasure, word: Sequence[str]) -> float:
    """TV defect for the element spelled by a generator word"""
    return tv_defect(mu, mu.spec.evaluate_word(word))


def measure_defects(mu: MolecularMeasure, cfg: SolveConfig) -> Dict[str, float]:
    """Per-generator defect of mu in the configured seminorm"""
    spec = mu.spec
    generators = cfg.generator_elements(spec)
    if cfg.kind == 'tv':
        return {name: tv_defect(mu, s) for name, s in generators.items()}
    if cfg.kind == 'blip':
        return {name: defect_blip(mu, s, cfg.ball_spec, tolerance=cfg.tolerance) for name, s in generators.items()}
    family = cfg.test_family(spec)
    return {name: defect_weak(mu, s, family) for name, s in generators.items()}


# --- LP construction -------------------------------------------------------------------------


def _difference_rows(ball: List[Element], index: Dict[Element, int], s: Element, spec: GroupSpec):
    """Coefficients of (mu - s*mu)(y) in the mean columns, for y in ball | s*ball"""
    rows: Dict[Element, Dict[int, float]] = {}
    for x in ball:
        rows.setdefault(x, {})
        rows[x][index[x]] = rows[x].get(index[x], 0.0) + 1.0
        y = spec.multiply(s, x)
        rows.setdefault(y, {})
        rows[y][index[x]] = rows[y].get(index[x], 0.0) - 1.0
    return dict(sorted(rows.items()))


def build_defect_lp(spec: GroupSpec, cfg: SolveConfig) -> DefectLp:
    """
    The defect-minimization LP over means supported on ball(r)

    Columns 0..n-1 hold the masses mu(x) for x in ball(r), sorted; then the
    objective variable t. For each generator s:

    - tv: split variables e_y >= |(mu - s*mu)(y)| with sum e_y <= t
    - blip: the dual of the bounded-Lipschitz LP, a flow alpha - beta + div(gamma)
      equal to mu - s*mu with C*sum(alpha + beta) + sum w*gamma <= t
    - weak: |mu(f) - (s*mu)(f)| <= t for every f in the family

    Args:
        spec: Group or semigroup
        cfg: Radius, defect kind and generator subset

    Returns:
        DefectLp with the assembled problem
    """
    ball = spec.ball(cfg.radius, cfg.cap)
    index = {g: i for i, g in enumerate(ball)}
    generators = cfg.generator_elements(spec)

    builder = LpBuilder()
    for i in range(len(ball)):
        builder.variable(f"mu[{i}]")
    t = builder.variable('t', cost=1.0)
    builder.equal({i: 1.0 for i in range(len(ball))}, 1.0)

    family = cfg.test_family(spec) if cfg.kind == 'weak' else []
    for name, s in generators.items():
        if cfg.kind == 'weak':
            for k, f in enumerate(family):
                row = {index[x]: f(x) - f(spec.multiply(s, x)) for x in ball}
                row = {j: v for j, v in row.items() if v}
                builder.less_equal({**row, t: -1.0}, 0.0)
                builder.less_equal({**{j: -v for j, v in row.items()}, t: -1.0}, 0.0)
            continue

        rows = _difference_rows(ball, index, s, spec)
        if cfg.kind == 'tv':
            budget = {t: -1.0}
            for y, coeffs in rows.items():
                e = builder.variable(f"e[{name},{spec.serialize_element(y)}]")
                builder.less_equal({**coeffs, e: -1.0}, 0.0)
                builder.less_equal({**{j: -v for j, v in coeffs.items()}, e: -1.0}, 0.0)
                budget[e] = 1.0
            builder.less_equal(budget, 0.0)
            continue

        ball_spec = cfg.ball_spec
        cap = ball_spec.sup_cap
        points = list(rows)
        budget = {t: -1.0}
        balance: Dict[Element, Dict[int, float]] = {}
        for y in points:
            alpha = builder.variable(f"alpha[{name},{spec.serialize_element(y)}]")
            beta = builder.variable(f"beta[{name},{spec.serialize_element(y)}]")
            budget[alpha] = budget[beta] = cap
            balance[y] = {alpha: 1.0, beta: -1.0}
        for i, y in enumerate(points):
            for z in points[i + 1:]:
                weight = ball_spec.lipschitz_cap * ball_spec.distance(spec, y, z)
                if weight >= 2.0 * cap:
                    continue
                for tail, head in ((y, z), (z, y)):
                    gamma = builder.variable(f"gamma[{name}]")
                    if weight:
                        budget[gamma] = weight
                    balance[tail][gamma] = 1.0
                    balance[head][gamma] = -1.0
        for y in points:
            builder.equal({**balance[y], **{j: -v for j, v in rows[y].items()}}, 0.0)
        builder.less_equal(budget, 0.0)

    problem = builder.build()
    logger.debug(f"Defect LP ({cfg.describe()}) on {spec.key}, r={cfg.radius}: "
                 f"{problem.num_variables} variables, {len(ball)} mean columns")
    return DefectLp(problem=problem, support=ball, objective_column=t, generators=generators)


# --- solves ----------------------------------------------------------------------------------


def _mean_from_columns(support: List[Element], values: np.ndarray) -> MolecularMeasure:
    """Clip solver noise below zero and renormalize to total mass 1"""
    weights = np.clip(np.asarray(values, dtype=float), 0.0, None)
    total = weights.sum()
    if total <= 0:
        raise PreconditionViolation("LP returned a measure with no positive mass")
    weights = weights / total
    return MolecularMeasure(support[0].spec, {g: float(w) for g, w in zip(support, weights) if w > 0})


def solve_invariant_mean(spec: GroupSpec, cfg: SolveConfig) -> DefectReport:
    """
    Minimize the worst generator defect over means supported on ball(r)

    Args:
        spec: Group or semigroup
        cfg: Radius, defect kind, tolerance and generator subset

    Returns:
        DefectReport with the optimal mean, its recomputed per-generator
        defects and the LP status
    """
    start = time.perf_counter()
    lp = build_defect_lp(spec, cfg)
    result = solve_lp(lp.problem, cfg.tolerance)
    mu = _mean_from_columns(lp.support, result.x[:lp.num_mean_columns])
    per_generator = measure_defects(mu, cfg)
    elapsed = time.perf_counter() - start

    report = DefectReport(measure=mu, per_generator=per_generator, radius=cfg.radius, kind=cfg.describe(),
                          lp_status=result.status, lp_value=max(0.0, result.value),
                          duality_gap=result.duality_gap, wall_time=elapsed)
    logger.info(f"Solved {cfg.describe()} mean on {spec.key}, r={cfg.radius}: "
                f"defect {report.max_defect:.12g} ({result.status}, {elapsed * 1000:.0f} ms)")
    return report


def defect_profile(spec: GroupSpec, r_max: int, kind: str = 'tv', ball_spec: Optional[LipschitzBallSpec] = None,
                   family: Optional[Sequence[TestFunction]] = None, tolerance: Optional[float] = None,
                   jobs: int = 1, cap: Optional[int] = None) -> pd.DataFrame:
    """
    Følner and LP defects for r = 0..r_max

    Args:
        spec: Group or semigroup
        r_max: Largest radius
        kind: 'tv', 'blip' or 'weak'
        ball_spec: Lipschitz ball for 'blip'
        family: Test family for 'weak' (default per radius: ball indicators)
        tolerance: LP tolerance
        jobs: Worker threads; rows are independent
        cap: Enumeration cap

    Returns:
        DataFrame with columns r, group, kind, folner_defect, lp_defect,
        lp_status; per-row wall times in milliseconds are in attrs['millis']
    """
    if r_max < 0:
        raise InvalidArgument(f"r_max must be nonnegative (got {r_max})")
    # Enumerate once up front so workers only read the cached trees.
    spec.ball_tree(r_max + 1, cap)

    def row(r: int) -> Dict[str, Any]:
        cfg = SolveConfig(radius=r, kind=kind, ball_spec=ball_spec, family=family, tolerance=tolerance, cap=cap)
        folner = measure_defects(folner_uniform(spec, r, cap), cfg)
        report = solve_invariant_mean(spec, cfg)
        return {
            'r': r,
            'group': spec.key,
            'kind': cfg.describe(),
            'folner_defect': max(folner.values(), default=0.0),
            'lp_defect': report.max_defect,
            'lp_status': report.lp_status,
            'millis': report.wall_time * 1000.0,
        }

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(row, range(r_max + 1)))

    table = pd.DataFrame.from_records(rows)
    millis = table.pop('millis').tolist()
    table.attrs['millis'] = millis
    logger.info(f"Defect profile on {spec.key} ({kind}) up to r={r_max}: "
                f"final LP defect {table['lp_defect'].iloc[-1]:.6g}")
    return table


# --- Day convexification ---------------------------------------------------------------------


class ConvexifyResult(NamedTuple):
    weights: np.ndarray
    point: np.ndarray
    residuals: Dict[str, float]
    euclidean_residuals: Dict[str, float]
    lp_value: float


def day_convexify(points: Sequence[Sequence[float]], action: AffineAction, generators: Optional[Sequence[str]] = None,
                  tolerance: Optional[float] = None) -> ConvexifyResult:
    """
    Convex combination of the given points with the smallest worst residual

    For an affine action x - s.x is affine in the weights, so minimizing
    max_s |x - s.x|_inf over the weight simplex is an LP.

    Args:
        points: Points of the action's domain
        action: AffineAction
        generators: Generator subset (default: all)
        tolerance: LP tolerance

    Returns:
        ConvexifyResult with the weights, the combined point and its residuals
    """
    if len(points) == 0:
        raise InvalidArgument("day_convexify needs at least one point")
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] != action.dimension:
        raise InvalidArgument(f"Points must have dimension {action.dimension} (got shape {X.shape})")
    outside = [i for i, x in enumerate(X) if not action.domain.contains(x)]
    if outside:
        raise PreconditionViolation(f"Points {outside} lie outside the action's domain")
    names = action.group.generator_names if generators is None else list(generators)
    for name in names:
        action.group.generator(name)

    builder = LpBuilder()
    weights = [builder.variable(f"lambda[{i}]") for i in range(len(X))]
    t = builder.variable('t', cost=1.0)
    builder.equal({w: 1.0 for w in weights}, 1.0)
    for name in names:
        A, b = action.maps[name]
        moved = X - (X @ A.T + b)
        for j in range(action.dimension):
            row = {w: float(moved[i, j]) for i, w in enumerate(weights) if moved[i, j]}
            builder.less_equal({**row, t: -1.0}, 0.0)
            builder.less_equal({**{w: -v for w, v in row.items()}, t: -1.0}, 0.0)

    result = solve_lp(builder.build(), tolerance)
    lam = np.clip(result.x[:len(X)], 0.0, None)
    lam = lam / lam.sum()
    point = lam @ X
    found = residuals(action, point)
    logger.info(f"Day convexification of {len(X)} points: max residual {result.value:.6g}")
    return ConvexifyResult(weights=lam, point=point,
                           residuals={name: found[name] for name in names},
                           euclidean_residuals={name: v for name, v in residuals(action, point, 'euclidean').items()
                                                if name in names},
                           lp_value=max(0.0, result.value))
