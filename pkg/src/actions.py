"""
Affine Actions
Affine group actions on bounded convex subsets of R^n, the orbit map and its
linear extension to molecular measures, and the approximate-fixed-point pipeline
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import Config
from .errors import InvalidArgument, PreconditionViolation, SolverError, UnsupportedOperation
from .groups import Element, GroupSpec, ZdGroup
from .lp import LpBuilder, solve_lp
from .measures import MolecularMeasure, convolve_left, is_mean, tv_norm

logger = logging.getLogger(__name__)

AffineMap = Tuple[np.ndarray, np.ndarray]

DOMAIN_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-10


@dataclass
class Domain:
    """
    Declared bounded convex set C

    kind is one of 'ball' (center, radius), 'box' (lower, upper),
    'hull' (points) or 'simplex' (probability simplex in R^dimension).
    """

    kind: str
    dimension: int
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    points: Optional[np.ndarray] = None

    def contains(self, x: np.ndarray, tol: float = DOMAIN_TOLERANCE) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            return False
        if self.kind == 'ball':
            return float(np.linalg.norm(x - self.center)) <= self.radius + tol
        if self.kind == 'box':
            return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        if self.kind == 'simplex':
            return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)
        return self._hull_contains(x, tol)

    def _hull_contains(self, x: np.ndarray, tol: float) -> bool:
        # Feasibility LP: lambda >= 0, sum lambda = 1, |P^T lambda - x| <= tol
        builder = LpBuilder()
        weights = [builder.variable(f"lambda[{i}]") for i in range(len(self.points))]
        builder.equal({w: 1.0 for w in weights}, 1.0)
        for j in range(self.dimension):
            row = {w: float(self.points[i, j]) for i, w in enumerate(weights)}
            builder.less_equal(row, float(x[j]) + tol)
            builder.less_equal({w: -v for w, v in row.items()}, -float(x[j]) + tol)
        try:
            solve_lp(builder.build())
        except SolverError:
            return False
        return True

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Random points of the domain, shape (count, dimension)"""
        n = self.dimension
        if self.kind == 'ball':
            directions = rng.normal(size=(count, n))
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            radii = self.radius * rng.random(count) ** (1.0 / n)
            return self.center + directions * radii[:, None]
        if self.kind == 'box':
            return self.lower + (self.upper - self.lower) * rng.random((count, n))
        if self.kind == 'simplex':
            return rng.dirichlet(np.ones(n), size=count)
        weights = rng.dirichlet(np.ones(len(self.points)), size=count)
        return weights @ self.points

    def to_json(self) -> Dict[str, Any]:
        if self.kind == 'ball':
            return {'kind': 'ball', 'center': self.center.tolist(), 'radius': self.radius}
        if self.kind == 'box':
            return {'kind': 'box', 'lower': self.lower.tolist(), 'upper': self.upper.tolist()}
        if self.kind == 'simplex':
            return {'kind': 'simplex'}
        return {'kind': 'hull', 'points': self.points.tolist()}

    @classmethod
    def from_json(cls, data: Dict[str, Any], dimension: int) -> 'Domain':
        kind = data.get('kind')
        try:
            if kind == 'ball':
                domain = cls('ball', dimension, center=np.asarray(data['center'], dtype=float),
                             radius=float(data['radius']))
                shapes = [domain.center.shape]
            elif kind == 'box':
                domain = cls('box', dimension, lower=np.asarray(data['lower'], dtype=float),
                             upper=np.asarray(data['upper'], dtype=float))
                shapes = [domain.lower.shape, domain.upper.shape]
            elif kind == 'simplex':
                return cls('simplex', dimension)
            elif kind == 'hull':
                domain = cls('hull', dimension, points=np.asarray(data['points'], dtype=float).reshape(-1, dimension))
                shapes = []
            else:
                raise InvalidArgument(f"Unknown domain kind {kind!r}")
        except (KeyError, ValueError, TypeError) as e:
            raise InvalidArgument(f"Malformed domain {data!r}: {e}")
        if any(shape != (dimension,) for shape in shapes):
            raise InvalidArgument(f"Domain {kind} does not match dimension {dimension}")
        return domain


class AffineAction:
    """
    An affine action given on generators: x -> A x + b per generator name

    Words act right to left, so act([s, t], x) = s . (t . x).
    """

    def __init__(self, group: GroupSpec, maps: Dict[str, AffineMap], domain: Domain):
        self.group = group
        self.domain = domain
        self.dimension = domain.dimension

        missing = [name for name in group.generator_names if name not in maps]
        unknown = [name for name in maps if name not in group.generators]
        if missing or unknown:
            raise InvalidArgument(
                f"Action generators do not match {group.key}: missing {missing or 'none'}, unknown {unknown or 'none'}"
            )

        self.maps: Dict[str, AffineMap] = {}
        for name in group.generator_names:
            A, b = maps[name]
            A = np.asarray(A, dtype=float)
            b = np.asarray(b, dtype=float)
            if A.shape != (self.dimension, self.dimension) or b.shape != (self.dimension,):
                raise InvalidArgument(f"Map for {name!r} has shapes {A.shape}, {b.shape}; "
                                      f"expected dimension {self.dimension}")
            self.maps[name] = (A, b)

    def _point(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise InvalidArgument(f"Point has shape {x.shape}; the action lives in dimension {self.dimension}")
        return x

    def apply(self, name: str, x: np.ndarray) -> np.ndarray:
        if name not in self.maps:
            raise InvalidArgument(f"Unknown generator {name!r}")
        A, b = self.maps[name]
        return A @ x + b

    def act(self, word: Sequence[str], x: Sequence[float]) -> np.ndarray:
        x = self._point(x)
        for name in reversed(list(word)):
            x = self.apply(name, x)
        return x

    def act_element(self, g: Element, x: Sequence[float]) -> np.ndarray:
        return self.act(self.group.word_for(g), x)

    def orbit(self, x0: Sequence[float], r: int, cap: Optional[int] = None) -> Dict[Element, np.ndarray]:
        """Orbit points g . x0 for every g in ball(r), following the BFS tree"""
        x0 = self._point(x0)
        tree = self.group.ball_tree(r, cap)
        points: Dict[Element, np.ndarray] = {}
        for g, (parent, name, _) in sorted(tree.items(), key=lambda item: item[1][2]):
            points[g] = x0 if parent is None else self.apply(name, points[parent])
        return points

    def orbit_points(self, elements: Sequence[Element], x0: Sequence[float]) -> Dict[Element, np.ndarray]:
        x0 = self._point(x0)
        return {g: self.act_element(g, x0) for g in elements}

    # --- validation ------------------------------------------------------------------------

    def check_inverses(self, tol: float = Config.AFFINE_INVERSE_TOLERANCE):
        """map(g^-1) must be the exact affine inverse of map(g)"""
        identity = np.eye(self.dimension)
        for name, inverse in self.group.inverse_names.items():
            A, b = self.maps[name]
            A_inv, b_inv = self.maps[inverse]
            if np.max(np.abs(A @ A_inv - identity)) > tol or np.max(np.abs(A @ b_inv + b)) > tol:
                raise InvalidArgument(f"Map for {inverse!r} is not the affine inverse of the map for {name!r}")

    def check_relations(self, samples: int = Config.RELATION_SAMPLES, seed: int = Config.SEED,
                        tol: float = Config.RELATION_TOLERANCE):
        """Sampling check that every defining relation of the group acts trivially"""
        relations = self.group.defining_relations()
        if not relations:
            return
        rng = np.random.default_rng(seed)
        for x in self.domain.sample(rng, samples):
            scale = max(1.0, float(np.max(np.abs(x))))
            for lhs, rhs in relations:
                gap = float(np.max(np.abs(self.act(lhs, x) - self.act(rhs, x))))
                if gap > tol * scale:
                    raise InvalidArgument(
                        f"Action violates the relation {''.join(lhs) or 'e'} = {''.join(rhs) or 'e'} "
                        f"(gap {gap:.3g})"
                    )

    def validate(self, samples: int = Config.RELATION_SAMPLES, seed: int = Config.SEED) -> 'AffineAction':
        self.check_inverses()
        self.check_relations(samples, seed)
        logger.debug(f"Action on R^{self.dimension} validated against {self.group.key}")
        return self


# --- operations ------------------------------------------------------------------------------


def act(action: AffineAction, word: Sequence[str], x: Sequence[float]) -> np.ndarray:
    return action.act(word, x)


def orbit_bound(action: AffineAction, x0: Sequence[float], r: int, cap: Optional[int] = None) -> float:
    """max over w in ball(r) of |w . x0|_inf"""
    return max(float(np.max(np.abs(p))) for p in action.orbit(x0, r, cap).values())


def extend_phi(mu: MolecularMeasure, action: AffineAction, x0: Sequence[float]) -> np.ndarray:
    """Linear extension of the orbit map: sum of c_i (s_i . x0)"""
    points = action.orbit_points(mu.support, x0)
    total = np.zeros(action.dimension)
    for g, c in mu.items():
        total = total + c * points[g]
    return total


def residuals(action: AffineAction, x: Sequence[float], norm: str = 'max') -> Dict[str, float]:
    """Per-generator |x - s . x| in the max norm (or 'euclidean')"""
    x = np.asarray(x, dtype=float)
    ord_ = np.inf if norm == 'max' else 2
    return {name: float(np.linalg.norm(x - action.apply(name, x), ord=ord_)) for name in action.maps}


def canonical_action(spec: GroupSpec, cap: Optional[int] = None) -> AffineAction:
    """
    Left-regular action of a finite group on the probability simplex

    Coordinates are indexed by the sorted group elements; generator s maps
    coordinate x to coordinate s*x, so a vector of weights is convolved by s.
    """
    if not spec.is_finite:
        raise UnsupportedOperation(f"canonical_action needs a finite group ({spec.key} is infinite)")
    elements = spec.elements(cap)
    index = {g: i for i, g in enumerate(elements)}
    n = len(elements)
    maps = {}
    for name, s in spec.generators.items():
        P = np.zeros((n, n))
        for g in elements:
            P[index[spec.multiply(s, g)], index[g]] = 1.0
        maps[name] = (P, np.zeros(n))
    logger.info(f"Built canonical action of {spec.key} on the {n}-simplex")
    return AffineAction(spec, maps, Domain('simplex', n))


def simplex_vertex(spec: GroupSpec, g: Element, cap: Optional[int] = None) -> np.ndarray:
    """Coordinate vector of g in the canonical action's simplex"""
    elements = spec.elements(cap)
    x = np.zeros(len(elements))
    x[elements.index(g)] = 1.0
    return x


# --- approximate fixed points ----------------------------------------------------------------


@dataclass
class AfpRow:
    radius: int
    mean: MolecularMeasure
    point: np.ndarray
    residuals: Dict[str, float]
    euclidean_residuals: Dict[str, float]
    tv_defects: Dict[str, float]
    identity_error: float
    orbit_diameter: float
    residual_bound_ok: bool
    orbit_flag: bool

    @property
    def tv_defect(self) -> float:
        return max(self.tv_defects.values(), default=0.0)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


@dataclass
class AfpTrace:
    group_key: str
    generator_names: List[str]
    rows: List[AfpRow] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        records = []
        for row in self.rows:
            record = {'r': row.radius, 'tv_defect': row.tv_defect}
            for name in self.generator_names:
                record[f"residual_{name}"] = row.residuals[name]
            record['residual_max'] = row.max_residual
            record['residual_identity_error'] = row.identity_error
            record['orbit_diameter'] = row.orbit_diameter
            record['residual_bound_ok'] = row.residual_bound_ok
            record['orbit_flag'] = row.orbit_flag
            records.append(record)
        return pd.DataFrame.from_records(records)


def _diameter(points: List[np.ndarray]) -> float:
    if len(points) < 2:
        return 0.0
    stacked = np.vstack(points)
    return float(np.max(stacked.max(axis=0) - stacked.min(axis=0)))


def _trace_row(spec: GroupSpec, action: AffineAction, x0: np.ndarray, radius: int, mu: MolecularMeasure) -> AfpRow:
    if not is_mean(mu, Config.LP_TOLERANCE):
        raise PreconditionViolation(f"Measure at radius {radius} is not a mean")

    shifted = {name: convolve_left(s, mu) for name, s in spec.generators.items()}
    used = set(mu.support)
    for nu in shifted.values():
        used.update(nu.support)
    points = action.orbit_points(sorted(used), x0)

    x = np.zeros(action.dimension)
    for g, c in mu.items():
        x = x + c * points[g]

    max_residuals, tv_defects = {}, {}
    identity_error = 0.0
    bound_ok = True
    diameter = 0.0
    for name, s_mu in shifted.items():
        moved = x - action.apply(name, x)
        difference = mu - s_mu
        image = np.zeros(action.dimension)
        for g, c in difference.items():
            image = image + c * points[g]
        identity_error = max(identity_error, float(np.max(np.abs(moved - image))) if moved.size else 0.0)

        residual = float(np.max(np.abs(moved))) if moved.size else 0.0
        tv = tv_norm(difference)
        local_diameter = _diameter([points[g] for g in set(mu.support) | set(s_mu.support)])
        diameter = max(diameter, local_diameter)
        if residual > tv / 2.0 * local_diameter + IDENTITY_TOLERANCE:
            bound_ok = False
        max_residuals[name] = residual
        tv_defects[name] = tv

    flagged = not all(action.domain.contains(p) for p in points.values())
    if flagged:
        logger.warning(f"Orbit points at radius {radius} leave the declared domain; the orbit may be unbounded")

    return AfpRow(radius=radius, mean=mu, point=x, residuals=max_residuals,
                  euclidean_residuals=residuals(action, x, norm='euclidean'), tv_defects=tv_defects,
                  identity_error=identity_error, orbit_diameter=diameter,
                  residual_bound_ok=bound_ok, orbit_flag=flagged)


def afp_pipeline(spec: GroupSpec, action: AffineAction, x0: Sequence[float], means: Sequence[MolecularMeasure],
                 radii: Optional[Sequence[int]] = None, jobs: int = 1) -> AfpTrace:
    """
    Push a sequence of means through the orbit map: x_r = extend_phi(mu_r)

    Each row records the per-generator residuals |x - s.x|_inf, the residual
    identity error |(x - s.x) - extend_phi(mu - s*mu)|_inf, the TV defects,
    and whether the bound residual <= tv/2 * orbit diameter held.

    Args:
        spec: Group the means live on
        action: Affine action of that group
        x0: Base point, inside the action's domain
        means: Sequence of means
        radii: Label for each row (defaults to 0, 1, ...)
        jobs: Worker threads for independent rows

    Returns:
        AfpTrace with one row per mean
    """
    if action.group.key != spec.key:
        raise InvalidArgument(f"Action is for {action.group.key}, not {spec.key}")
    x0 = action._point(x0)
    if not action.domain.contains(x0):
        raise PreconditionViolation("x0 lies outside the action's domain")
    radii = list(range(len(means))) if radii is None else list(radii)
    if len(radii) != len(means):
        raise InvalidArgument(f"{len(radii)} radii for {len(means)} means")

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(lambda pair: _trace_row(spec, action, x0, pair[0], pair[1]), zip(radii, means)))

    trace = AfpTrace(group_key=spec.key, generator_names=spec.generator_names, rows=rows)
    logger.info(f"AFP pipeline on {spec.key}: {len(rows)} rows, "
                f"final residual {rows[-1].max_residual:.3g}" if rows else "AFP pipeline: no rows")
    return trace


# --- JSON ------------------------------------------------------------------------------------


def _affine_inverse(A: np.ndarray, b: np.ndarray) -> AffineMap:
    A_inv = np.linalg.inv(A)
    return A_inv, -A_inv @ b


def action_from_json(data: Dict[str, Any], group: GroupSpec, validate: bool = True,
                     seed: Optional[int] = None) -> AffineAction:
    """
    Build an AffineAction from JSON

    Args:
        data: {"dimension": n, "generators": {"<gen>": {"A": [[..]], "b": [..]}}, "domain": {...}}
              or {"canonical": true}
        group: Group acting
        validate: Run the inverse and relation checks
        seed: Seed for the relation sampling (defaults to Config)

    Returns:
        The action; inverse generators left out of the JSON get the exact affine inverse
    """
    if not isinstance(data, dict):
        raise InvalidArgument("Action specification must be a JSON object")
    if data.get('canonical'):
        return canonical_action(group)
    try:
        dimension = int(data['dimension'])
        maps = {name: (np.asarray(entry['A'], dtype=float), np.asarray(entry.get('b', [0.0] * dimension), dtype=float))
                for name, entry in data['generators'].items()}
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidArgument(f"Malformed action specification: {e}")

    for name, (A, b) in maps.items():
        if A.shape != (dimension, dimension) or b.shape != (dimension,):
            raise InvalidArgument(
                f"Map for {name!r} has shapes {A.shape}, {b.shape}; expected ({dimension}, {dimension}), ({dimension},)"
            )

    for name, inverse in group.inverse_names.items():
        if name in maps and inverse not in maps:
            try:
                maps[inverse] = _affine_inverse(*maps[name])
            except np.linalg.LinAlgError:
                raise InvalidArgument(f"Map for {name!r} is not invertible")

    domain = Domain.from_json(data.get('domain', {}), dimension)
    action = AffineAction(group, maps, domain)
    return action.validate(seed=Config.SEED if seed is None else seed) if validate else action


def action_to_json(action: AffineAction) -> Dict[str, Any]:
    return {
        'dimension': action.dimension,
        'generators': {name: {'A': A.tolist(), 'b': b.tolist()} for name, (A, b) in action.maps.items()},
        'domain': action.domain.to_json(),
    }


def load_action(path, group: GroupSpec, seed: Optional[int] = None) -> AffineAction:
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise InvalidArgument(f"Action specification not found: {path}")
    except json.JSONDecodeError as e:
        raise InvalidArgument(f"Action specification {path} is not valid JSON: {e}")
    action = action_from_json(data, group, seed=seed)
    logger.info(f"Loaded action of {group.key} on R^{action.dimension} from {path}")
    return action


def rotation_action(spec: GroupSpec, angle: float, center: Sequence[float] = (0.0, 0.0),
                    radius: float = 1.0) -> AffineAction:
    """
    Z acting on the plane by rotation through `angle` about `center`

    The domain is the disc of the given radius about the center, which
    holds every orbit starting inside it.
    """
    if not isinstance(spec, ZdGroup) or spec.d != 1:
        raise InvalidArgument(f"Rotation actions are defined for Z^1 (got {spec.key})")
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    p = np.asarray(center, dtype=float)
    maps = {'+1': (R, p - R @ p), '-1': _affine_inverse(R, p - R @ p)}
    return AffineAction(spec, maps, Domain('ball', 2, center=p, radius=float(radius)))
