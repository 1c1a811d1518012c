import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import InvalidArgument
from src.groups import CyclicGroup, FreeGroup, HeisenbergGroup, LamplighterGroup, NaturalsSemigroup, ZdGroup
from src.measures import (MolecularMeasure, combine, convolve_left, convolve_right, evaluate, is_mean,
                          measure_from_json, measure_to_json, point_mass, tv_norm, uniform, zero_measure)
from src.testfn import TestFunction, constant, indicator, left_translate, right_translate

KINDS = [ZdGroup(1), ZdGroup(2), CyclicGroup(7), FreeGroup(2), HeisenbergGroup(), LamplighterGroup()]


def random_measure(spec, rng, size=5, radius=2):
    elements = spec.ball(radius)
    picks = rng.choice(len(elements), size=min(size, len(elements)), replace=False)
    return MolecularMeasure(spec, {elements[i]: float(rng.integers(-16, 17)) / 16.0 for i in picks})


def random_function(spec, rng, radius=4):
    return TestFunction(spec, {g: float(rng.integers(-8, 9)) / 4.0 for g in spec.ball(radius)},
                        default=float(rng.integers(-2, 3)))


def test_point_mass():
    f2 = FreeGroup(2)
    a = f2.generator('a')
    assert evaluate(point_mass(f2.identity), constant(f2)) == 1.0
    assert tv_norm(point_mass(a)) == 1.0
    f = TestFunction(f2, {a: 0.25}, default=3.0)
    assert evaluate(point_mass(a), f) == 0.25


def test_combine_examples():
    z = ZdGroup(1)
    a = point_mass(z.element((4,)))
    assert combine([(0.5, a), (0.5, a)]) == a
    assert len(combine([(1.0, a), (-1.0, a)])) == 0
    weights = [0.2, 0.3, 0.5]
    mean = combine([(w, point_mass(z.element((k,)))) for k, w in enumerate(weights)])
    assert is_mean(mean, 1e-15)


def test_combine_rejects_mixed_groups():
    with pytest.raises(InvalidArgument):
        combine([(1.0, point_mass(ZdGroup(1).identity)), (1.0, point_mass(FreeGroup(2).identity))])


def test_evaluate_examples():
    z = ZdGroup(1)
    mu = 0.3 * point_mass(z.element((0,))) + 0.7 * point_mass(z.element((2,)))
    assert evaluate(mu, indicator([z.element((2,))])) == pytest.approx(0.7)
    assert evaluate(uniform(z.ball(3)), constant(z)) == pytest.approx(1.0)


def test_convolution_examples():
    f2 = FreeGroup(2)
    s, t = f2.parse_element('ab'), f2.parse_element('Ba')
    assert convolve_left(s, point_mass(t)) == point_mass(f2.multiply(s, t))
    mu = uniform(f2.ball(1))
    assert convolve_left(f2.identity, mu) == mu


def test_convolution_merges_colliding_support():
    c2 = CyclicGroup(2)
    mu = MolecularMeasure(c2, {c2.element((0,)): 0.25, c2.element((1,)): 0.75})
    shifted = convolve_left(c2.generator('+1'), mu)
    assert shifted.coefficient(c2.element((0,))) == 0.75


def test_tv_norm_examples():
    z = ZdGroup(1)
    assert tv_norm(uniform(z.ball(3))) == pytest.approx(1.0)
    assert tv_norm(point_mass(z.element((1,))) - point_mass(z.element((2,)))) == 2.0
    assert tv_norm(zero_measure(z)) == 0.0


def test_is_mean_examples():
    z = ZdGroup(1)
    assert is_mean(uniform(z.ball(3)), 0.0)
    assert not is_mean(point_mass(z.element((1,))) - point_mass(z.element((2,))), 1e-9)
    with pytest.raises(InvalidArgument):
        is_mean(uniform(z.ball(1)), -1.0)


@pytest.mark.parametrize("spec", KINDS)
def test_action_identities(spec):
    rng = np.random.default_rng(7)
    elements = spec.ball(2)
    for _ in range(500):
        s, t = (elements[i] for i in rng.integers(0, len(elements), size=2))
        mu, nu = random_measure(spec, rng), random_measure(spec, rng)
        p = uniform([elements[i] for i in rng.choice(len(elements), size=3, replace=False)])
        assert is_mean(convolve_left(s, p), 1e-12)
        f = random_function(spec, rng)
        assert convolve_left(s, point_mass(t)) == point_mass(spec.multiply(s, t))
        assert convolve_left(s, convolve_left(t, mu)) == convolve_left(spec.multiply(s, t), mu)
        assert convolve_left(s, combine([(0.5, mu), (-2.0, nu)])) == \
            combine([(0.5, convolve_left(s, mu)), (-2.0, convolve_left(s, nu))])
        assert evaluate(convolve_left(s, mu), f) == pytest.approx(evaluate(mu, left_translate(s, f)), abs=1e-12)
        assert evaluate(convolve_right(mu, s), f) == pytest.approx(evaluate(mu, right_translate(s, f)), abs=1e-12)


@pytest.mark.parametrize("spec", KINDS + [NaturalsSemigroup()])
def test_convolution_preserves_means(spec):
    rng = np.random.default_rng(8)
    elements = spec.ball(2)
    weights = rng.integers(1, 9, size=len(elements)).astype(float)
    mu = MolecularMeasure(spec, dict(zip(elements, weights / weights.sum())))
    for s in spec.generators.values():
        shifted = convolve_left(s, mu)
        assert sorted(shifted.weights.values()) == sorted(mu.weights.values())
        assert is_mean(shifted, 1e-12)


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=6), st.floats(-4, 4, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_tv_norm_is_a_norm(points, scalar):
    z = ZdGroup(1)
    mu = MolecularMeasure(z, {z.element((p,)): 1.0 + i for i, p in enumerate(points)})
    nu = MolecularMeasure(z, {z.element((-p,)): 0.5 - i for i, p in enumerate(points)})
    assert tv_norm(mu + nu) <= tv_norm(mu) + tv_norm(nu) + 1e-12
    assert tv_norm(scalar * mu) == pytest.approx(abs(scalar) * tv_norm(mu), abs=1e-9)


def test_zero_coefficients_are_dropped():
    z = ZdGroup(1)
    mu = MolecularMeasure(z, {z.element((0,)): 0.0, z.element((1,)): 2.0})
    assert mu.support == [z.element((1,))]


def test_total_mass_of_sevenths_is_exact():
    z = ZdGroup(1)
    assert uniform(z.ball(3)).total_mass == 1.0


def test_measure_json_round_trip_and_prune():
    f2 = FreeGroup(2)
    mu = MolecularMeasure(f2, {f2.parse_element('ab'): 0.5, f2.identity: 0.5 - 1e-13, f2.parse_element('B'): 1e-13})
    data = measure_to_json(mu)
    assert [entry['element'] for entry in data] == ['', 'B', 'ab']
    assert measure_from_json(data, f2) == mu
    assert len(measure_to_json(mu, prune=1e-12)) == 2


def test_measure_from_json_rejects_garbage():
    with pytest.raises(InvalidArgument):
        measure_from_json({"element": 1}, ZdGroup(1))
    with pytest.raises(InvalidArgument):
        measure_from_json([{"weight": 1.0}], ZdGroup(1))


def test_measure_total_mass_uses_exact_summation():
    z = ZdGroup(1)
    mu = MolecularMeasure(z, {z.element((k,)): 0.1 for k in range(10)})
    assert mu.total_mass == 1.0
    assert math.isclose(tv_norm(mu), 1.0)
