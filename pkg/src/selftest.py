"""
Self-test
Quick invariant suite run by `dayflow selftest`: algebraic identities,
closed-form defects, LP sandwiches and the fixed-point pipeline
"""

import logging
import math
import time
from typing import Callable, Dict, List, Tuple

import numpy as np

from .actions import afp_pipeline, canonical_action, extend_phi, rotation_action, simplex_vertex
from .config import Config
from .groups import CyclicGroup, FreeGroup, GroupSpec, HeisenbergGroup, LamplighterGroup, SymmetricGroup, ZdGroup
from .measures import MolecularMeasure, convolve_left, evaluate, is_mean, point_mass, tv_norm
from .solver import (SolveConfig, box_mean, day_convexify, exact_invariant_mean, folner_uniform,
                     solve_invariant_mean, tv_defect)
from .testfn import LipschitzBallSpec, TestFunction, defect_blip, left_translate, pullback_functional

logger = logging.getLogger(__name__)

Check = Callable[[np.random.Generator], str]


def _random_measure(spec: GroupSpec, rng: np.random.Generator, radius: int = 2, size: int = 4) -> MolecularMeasure:
    ball = spec.ball(radius)
    picks = rng.choice(len(ball), size=min(size, len(ball)), replace=False)
    # Dyadic coefficients keep every sum exact.
    return MolecularMeasure(spec, {ball[i]: float(rng.integers(-8, 9)) / 8.0 for i in picks})


def _sample_groups() -> List[GroupSpec]:
    return [ZdGroup(1), ZdGroup(2), CyclicGroup(5), SymmetricGroup(3), FreeGroup(2),
            HeisenbergGroup(), LamplighterGroup()]


def check_equivariance(rng: np.random.Generator) -> str:
    cases = 0
    for spec in _sample_groups():
        ball = spec.ball(2)
        for _ in range(20):
            s, t = (ball[i] for i in rng.integers(0, len(ball), size=2))
            mu = _random_measure(spec, rng)
            assert convolve_left(s, point_mass(t)) == point_mass(spec.multiply(s, t))
            assert convolve_left(s, convolve_left(t, mu)) == convolve_left(spec.multiply(s, t), mu)
            f = TestFunction(spec, {g: float(rng.integers(-4, 5)) for g in spec.ball(3)})
            assert evaluate(convolve_left(s, mu), f) == evaluate(mu, left_translate(s, f))
            cases += 1
    return f"{cases} cases"


def check_means_preserved(rng: np.random.Generator) -> str:
    for spec in _sample_groups():
        mu = folner_uniform(spec, 1)
        for s in spec.generators.values():
            assert is_mean(convolve_left(s, mu), 1e-12)
    return "ball means stay means"


def check_folner_decay(rng: np.random.Generator) -> str:
    z, z2 = ZdGroup(1), ZdGroup(2)
    for r in (1, 5, 20):
        assert abs(tv_defect(folner_uniform(z, r), z.generator('+1')) - 2.0 / (2 * r + 1)) <= 1e-12
    for n in (2, 7, 15):
        mu = box_mean(z2, n)
        for s in z2.generators.values():
            assert abs(tv_defect(mu, s) - 2.0 / n) <= 1e-12
    return "Z and Z^2 closed forms"


def check_finite_invariance(rng: np.random.Generator) -> str:
    for spec in (CyclicGroup(6), SymmetricGroup(3)):
        report = solve_invariant_mean(spec, SolveConfig(radius=spec.diameter()))
        assert report.max_defect <= 1e-9, report.max_defect
        action = canonical_action(spec)
        trace = afp_pipeline(spec, action, simplex_vertex(spec, spec.identity), [exact_invariant_mean(spec)])
        assert trace.rows[0].max_residual <= 1e-9
    return "C_6 and S_3"


def check_feasibility_sandwich(rng: np.random.Generator) -> str:
    spec = ZdGroup(1)
    previous = math.inf
    for r in range(4):
        report = solve_invariant_mean(spec, SolveConfig(radius=r))
        assert report.max_defect <= 2.0 / (2 * r + 1) + Config.DEFECT_SLACK
        assert report.max_defect <= previous + Config.DEFECT_SLACK
        previous = report.max_defect
    floor = solve_invariant_mean(FreeGroup(2), SolveConfig(radius=1)).max_defect
    assert floor > 0.1
    return f"Z profile monotone, F_2 floor {floor:.6g}"


def check_discrete_blip(rng: np.random.Generator) -> str:
    ball_spec = LipschitzBallSpec(metric='discrete')
    for spec in (ZdGroup(1), FreeGroup(2)):
        ball = spec.ball(2)
        for _ in range(5):
            weights = rng.random(len(ball))
            mu = MolecularMeasure(spec, {g: w / weights.sum() for g, w in zip(ball, weights)})
            s = spec.generators[spec.generator_names[0]]
            expected = min(tv_norm(mu - convolve_left(s, mu)), 2.0)
            assert abs(defect_blip(mu, s, ball_spec) - expected) <= 1e-7
    return "discrete metric matches TV"


def check_pullback_duality(rng: np.random.Generator) -> str:
    c6 = CyclicGroup(6)
    examples = [
        (rotation_action(ZdGroup(1), math.pi / 3, center=(1.0, 0.0)), np.zeros(2)),
        (canonical_action(c6), simplex_vertex(c6, c6.identity)),
    ]
    for action, x0 in examples:
        for _ in range(500):
            mu = _random_measure(action.group, rng, radius=4, size=5)
            xi = rng.normal(size=action.dimension)
            f = pullback_functional(xi, action, x0, radius=4)
            assert abs(float(xi @ extend_phi(mu, action, x0)) - evaluate(mu, f)) <= 1e-12 * max(1.0, tv_norm(mu))
    return f"500 functionals on each of {len(examples)} actions"


def check_rotation_pipeline(rng: np.random.Generator) -> str:
    spec = ZdGroup(1)
    center = np.array([1.0, 0.0])
    action = rotation_action(spec, math.pi / 3, center=center)
    windows = list(range(1, 31))
    trace = afp_pipeline(spec, action, np.zeros(2), [box_mean(spec, n) for n in windows], radii=windows)
    for n, row in zip(windows, trace.rows):
        assert row.identity_error <= 1e-10
        assert row.residual_bound_ok
        assert np.linalg.norm(row.point - center) <= 2.0 / n + 1e-9
    return f"{len(windows)} windows"


def check_day_convexify(rng: np.random.Generator) -> str:
    spec = ZdGroup(1)
    action = rotation_action(spec, math.pi / 3, center=(1.0, 0.0))
    for _ in range(10):
        points = action.domain.sample(rng, int(rng.integers(1, 6)))
        result = day_convexify(points, action)
        best = min(max(np.max(np.abs(p - action.apply(name, p))) for name in action.maps) for p in points)
        assert max(result.residuals.values()) <= best + 1e-7
    return "10 random instances"


CHECKS: List[Tuple[str, Check]] = [
    ('equivariance', check_equivariance),
    ('means_preserved', check_means_preserved),
    ('folner_decay', check_folner_decay),
    ('finite_invariance', check_finite_invariance),
    ('feasibility_sandwich', check_feasibility_sandwich),
    ('discrete_blip', check_discrete_blip),
    ('pullback_duality', check_pullback_duality),
    ('rotation_pipeline', check_rotation_pipeline),
    ('day_convexify', check_day_convexify),
]


def run_selftest(seed: int = Config.SEED) -> Dict[str, Dict]:
    """
    Run every check with a generator seeded from `seed`

    Returns:
        Dict check name -> {'passed', 'detail', 'millis'}
    """
    results = {}
    for name, check in CHECKS:
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        try:
            detail = check(rng)
            passed = True
        except AssertionError as e:
            detail = f"assertion failed {e}".strip()
            passed = False
        millis = (time.perf_counter() - start) * 1000.0
        results[name] = {'passed': passed, 'detail': detail, 'millis': millis}
        marker = '✅' if passed else '❌'
        logger.info(f"{marker} {name}: {detail} ({millis:.0f} ms)")
    return results
