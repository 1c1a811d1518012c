import itertools
import math

import numpy as np
import pytest

from src.actions import AffineAction, Domain, rotation_action
from src.config import Config
from src.errors import InvalidArgument, PreconditionViolation, ResourceLimit, UnsupportedOperation
from src.groups import CyclicGroup, FreeGroup, NaturalsSemigroup, SymmetricGroup, ZdGroup
from src.measures import is_mean
from src.solver import (SolveConfig, box_mean, day_convexify, default_family, defect_profile,
                        exact_invariant_mean, folner_uniform, measure_defects, solve_invariant_mean,
                        tv_defect, word_defect)
from src.testfn import LipschitzBallSpec


@pytest.mark.parametrize("r", [0, 1, 5, 20])
def test_folner_defect_on_integers(r):
    z = ZdGroup(1)
    mu = folner_uniform(z, r)
    assert tv_defect(mu, z.generator('+1')) == pytest.approx(2.0 / (2 * r + 1), abs=1e-12)
    if r >= 1:
        assert word_defect(mu, ['+1', '+1']) == pytest.approx(4.0 / (2 * r + 1), abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 7, 15])
def test_box_means_on_the_plane(n):
    z2 = ZdGroup(2)
    mu = box_mean(z2, n)
    assert len(mu) == n * n
    for s in z2.generators.values():
        assert tv_defect(mu, s) == pytest.approx(2.0 / n, abs=1e-12)


def test_baseline_argument_checks():
    with pytest.raises(InvalidArgument):
        box_mean(FreeGroup(2), 3)
    with pytest.raises(InvalidArgument):
        box_mean(ZdGroup(1), 0)
    with pytest.raises(UnsupportedOperation):
        exact_invariant_mean(ZdGroup(1))


def test_box_mean_over_the_cap(monkeypatch):
    monkeypatch.setattr(Config, 'ENUMERATION_CAP', 100)
    assert len(box_mean(ZdGroup(2), 10)) == 100
    with pytest.raises(ResourceLimit):
        box_mean(ZdGroup(2), 11)


def test_exact_invariant_mean_on_finite_groups():
    for spec in (CyclicGroup(6), SymmetricGroup(3)):
        mu = exact_invariant_mean(spec)
        for g in spec.elements():
            assert tv_defect(mu, g) <= 1e-15


def test_solve_config_validation():
    with pytest.raises(InvalidArgument):
        SolveConfig(radius=-1)
    with pytest.raises(InvalidArgument):
        SolveConfig(radius=True)
    with pytest.raises(InvalidArgument):
        SolveConfig(radius=2, kind='sup')
    with pytest.raises(InvalidArgument):
        SolveConfig(radius=2, tolerance=0.0)
    assert SolveConfig(radius=1, kind='blip').ball_spec == LipschitzBallSpec()


@pytest.mark.parametrize("spec", [CyclicGroup(6), SymmetricGroup(3), CyclicGroup(2)])
def test_finite_groups_reach_zero_at_the_diameter(spec):
    report = solve_invariant_mean(spec, SolveConfig(radius=spec.diameter()))
    assert report.max_defect <= 1e-9
    assert report.lp_status == 'optimal'
    assert is_mean(report.measure, 1e-9)


def test_integer_profile_matches_closed_form():
    z = ZdGroup(1)
    previous = math.inf
    for r in range(6):
        report = solve_invariant_mean(z, SolveConfig(radius=r))
        assert report.max_defect == pytest.approx(2.0 / (2 * r + 1), abs=1e-6)
        assert report.max_defect <= previous + 1e-7
        assert set(report.measure.support) <= set(z.ball(r))
        assert is_mean(report.measure, 1e-9)
        previous = report.max_defect


@pytest.mark.parametrize("r,expected", [(1, 6.0 / 5.0), (2, 18.0 / 17.0)])
def test_free_group_floor(r, expected):
    f2 = FreeGroup(2)
    report = solve_invariant_mean(f2, SolveConfig(radius=r))
    assert report.max_defect == pytest.approx(expected, abs=1e-7)
    assert report.lp_value == pytest.approx(expected, abs=1e-7)
    subset = solve_invariant_mean(f2, SolveConfig(radius=r, generators=['a', 'b']))
    assert subset.max_defect == pytest.approx(expected, abs=1e-7)
    assert subset.lp_value == pytest.approx(expected, abs=1e-7)
    assert set(subset.per_generator) == {'a', 'b'}


@pytest.mark.parametrize("r", [1, 3, 6])
def test_naturals_defect(r):
    report = solve_invariant_mean(NaturalsSemigroup(), SolveConfig(radius=r))
    assert report.max_defect == pytest.approx(2.0 / (r + 1), abs=1e-6)


def test_unknown_generator_subset():
    with pytest.raises(InvalidArgument):
        solve_invariant_mean(ZdGroup(1), SolveConfig(radius=1, generators=['x']))


def test_blip_solve_matches_recomputed_defect():
    z = ZdGroup(1)
    tv = solve_invariant_mean(z, SolveConfig(radius=3))
    for metric in ('word', 'unit', 'discrete'):
        cfg = SolveConfig(radius=3, kind='blip', ball_spec=LipschitzBallSpec(metric=metric))
        report = solve_invariant_mean(z, cfg)
        assert report.max_defect == pytest.approx(report.lp_value, abs=1e-6)
        assert report.max_defect <= tv.max_defect + 1e-6
        assert report.kind == cfg.ball_spec.describe()
    discrete = solve_invariant_mean(z, SolveConfig(radius=3, kind='blip',
                                                   ball_spec=LipschitzBallSpec(metric='discrete')))
    assert discrete.max_defect == pytest.approx(tv.max_defect, abs=1e-6)


def test_blip_solve_vanishes_on_finite_groups():
    c4 = CyclicGroup(4)
    report = solve_invariant_mean(c4, SolveConfig(radius=2, kind='blip'))
    assert report.max_defect <= 1e-7


def test_weak_solve():
    z = ZdGroup(1)
    cfg = SolveConfig(radius=2, kind='weak')
    assert len(default_family(z, 2)) == 3
    report = solve_invariant_mean(z, cfg)
    assert report.max_defect == pytest.approx(report.lp_value, abs=1e-6)
    folner = measure_defects(folner_uniform(z, 2), cfg)
    assert report.max_defect <= max(folner.values()) + 1e-7


def test_report_json():
    report = solve_invariant_mean(CyclicGroup(3), SolveConfig(radius=1))
    data = report.to_json()
    assert data['group'] == {'kind': 'cyclic', 'n': 3}
    assert data['kind'] == 'tv'
    assert sum(entry['weight'] for entry in data['measure']) == pytest.approx(1.0)


@pytest.mark.parametrize("jobs", [1, 3])
def test_defect_profile(jobs):
    z = ZdGroup(1)
    table = defect_profile(z, 4, jobs=jobs)
    assert list(table.columns) == ['r', 'group', 'kind', 'folner_defect', 'lp_defect', 'lp_status']
    assert table['r'].tolist() == [0, 1, 2, 3, 4]
    assert len(table.attrs['millis']) == 5
    assert (table['lp_defect'] <= table['folner_defect'] + 1e-7).all()
    assert table['lp_defect'].is_monotonic_decreasing


def test_free_group_profile_stays_above_one():
    table = defect_profile(FreeGroup(2), 2)
    assert table['lp_defect'].tolist() == pytest.approx([2.0, 6.0 / 5.0, 18.0 / 17.0], abs=1e-7)
    assert table['lp_defect'].is_monotonic_decreasing
    assert table['lp_defect'].min() > 1.0
    assert (table['lp_status'] == 'optimal').all()


def test_defect_profile_rejects_negative_radius():
    with pytest.raises(InvalidArgument):
        defect_profile(ZdGroup(1), -1)


def _flip():
    c2 = CyclicGroup(2)
    domain = Domain('box', 1, lower=np.array([-1.0]), upper=np.array([1.0]))
    return AffineAction(c2, {'+1': (np.array([[-1.0]]), np.zeros(1))}, domain)


def test_day_convexify_keeps_a_fixed_point():
    action = rotation_action(ZdGroup(1), math.pi / 3, center=(1.0, 0.0))
    result = day_convexify([[1.0, 0.0]], action)
    assert result.weights.tolist() == [1.0]
    assert max(result.residuals.values()) <= 1e-12


def test_day_convexify_averages_an_orbit_of_order_two():
    result = day_convexify([[-1.0], [1.0]], _flip())
    assert result.weights == pytest.approx([0.5, 0.5], abs=1e-9)
    assert result.point == pytest.approx([0.0], abs=1e-9)
    assert result.lp_value <= 1e-9


def test_day_convexify_beats_a_weight_grid():
    action = rotation_action(ZdGroup(1), math.pi / 3, center=(1.0, 0.0))
    rng = np.random.default_rng(12)
    for _ in range(5):
        points = action.domain.sample(rng, 3)
        result = day_convexify(points, action)
        assert max(result.residuals.values()) == pytest.approx(result.lp_value, abs=1e-7)
        grid = np.linspace(0.0, 1.0, 51)
        best = math.inf
        for a, b in itertools.product(grid, grid):
            if a + b > 1.0:
                continue
            x = np.array([a, b, 1.0 - a - b]) @ points
            best = min(best, max(np.max(np.abs(x - action.apply(name, x))) for name in action.maps))
        assert result.lp_value <= best + 1e-7
        single = min(max(np.max(np.abs(p - action.apply(name, p))) for name in action.maps) for p in points)
        assert result.lp_value <= single + 1e-7


def test_day_convexify_argument_checks():
    action = _flip()
    with pytest.raises(InvalidArgument):
        day_convexify([], action)
    with pytest.raises(InvalidArgument):
        day_convexify([[0.0, 0.0]], action)
    with pytest.raises(PreconditionViolation):
        day_convexify([[3.0]], action)


def _is_weight_vector(weights):
    return bool(np.all(weights >= -1e-12)) and abs(float(np.sum(weights)) - 1.0) <= 1e-9


@pytest.mark.parametrize("make_action", [
    lambda: rotation_action(ZdGroup(1), math.pi / 3, center=(1.0, 0.0)),
    _flip,
])
def test_day_convexify_never_loses_to_a_single_point(make_action):
    action = make_action()
    rng = np.random.default_rng(21)
    for _ in range(100):
        points = action.domain.sample(rng, int(rng.integers(1, 6)))
        result = day_convexify(points, action)
        assert _is_weight_vector(result.weights)
        single = min(max(np.max(np.abs(p - action.apply(name, p))) for name in action.maps) for p in points)
        assert result.lp_value <= single + 1e-7
        assert max(result.residuals.values()) <= result.lp_value + 1e-7
