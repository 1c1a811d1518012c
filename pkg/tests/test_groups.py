import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import InvalidArgument, ResourceLimit, UnsupportedOperation
from src.groups import (CyclicGroup, DirectProduct, FreeGroup, HeisenbergGroup, LamplighterGroup,
                        NaturalsSemigroup, SymmetricGroup, ZdGroup, ball, group_from_json, invert,
                        load_group, multiply, word_metric)

GROUPS = [ZdGroup(1), ZdGroup(2), CyclicGroup(5), SymmetricGroup(3), SymmetricGroup(4), FreeGroup(2),
          HeisenbergGroup(), LamplighterGroup(), DirectProduct((ZdGroup(1), CyclicGroup(3)))]


def _random_elements(spec, rng, count, radius=3):
    elements = spec.ball(radius)
    return [elements[i] for i in rng.integers(0, len(elements), size=count)]


def test_integer_addition():
    z = ZdGroup(1)
    assert multiply(z.element((2,)), z.element((3,))) == z.element((5,))
    assert invert(z.element((5,))) == z.element((-5,))


def test_free_group_reduction():
    f2 = FreeGroup(2)
    a, A = f2.generator('a'), f2.generator('A')
    assert a * A == f2.identity
    assert invert(f2.parse_element('ab')) == f2.parse_element('BA')


def test_heisenberg_matches_matrix_product():
    h = HeisenbergGroup()

    def matrix(g):
        a, b, c = g.form
        return np.array([[1, a, c], [0, 1, b], [0, 0, 1]])

    assert multiply(h.element((1, 0, 0)), h.element((0, 1, 0))) == h.element((1, 1, 1))
    rng = np.random.default_rng(0)
    for g, k in zip(_random_elements(h, rng, 50), _random_elements(h, rng, 50)):
        product = matrix(g) @ matrix(k)
        assert h.multiply(g, k).form == (product[0, 1], product[1, 2], product[0, 2])


def test_symmetric_inverse_of_three_cycle():
    s3 = SymmetricGroup(3)
    cycle = s3.parse_element([2, 3, 1])
    assert s3.serialize_element(invert(cycle)) == [3, 1, 2]


def test_mismatched_groups_rejected():
    with pytest.raises(InvalidArgument):
        multiply(ZdGroup(1).identity, FreeGroup(2).identity)


def test_naturals_have_no_inverses():
    n = NaturalsSemigroup()
    with pytest.raises(UnsupportedOperation):
        invert(n.element((3,)))


@pytest.mark.parametrize("spec,r,size", [
    (ZdGroup(1), 3, 7),
    (FreeGroup(2), 2, 17),
    (FreeGroup(2), 3, 53),
    (CyclicGroup(5), 2, 5),
    (SymmetricGroup(3), 3, 6),
    (NaturalsSemigroup(), 4, 5),
])
def test_ball_sizes(spec, r, size):
    assert len(ball(spec, r)) == size


@pytest.mark.parametrize("spec", GROUPS + [NaturalsSemigroup()])
def test_ball_zero_is_identity(spec):
    assert ball(spec, 0) == [spec.identity]


def test_ball_is_sorted_and_matches_range():
    z = ZdGroup(1)
    assert [g.form[0] for g in ball(z, 3)] == list(range(-3, 4))


@pytest.mark.parametrize("d,r", [(2, 3), (3, 2), (2, 5)])
def test_zd_ball_matches_lattice_count(d, r):
    grid = np.stack(np.meshgrid(*[np.arange(-r, r + 1)] * d), axis=-1).reshape(-1, d)
    expected = int((np.abs(grid).sum(axis=1) <= r).sum())
    assert len(ZdGroup(d).ball(r)) == expected


@pytest.mark.parametrize("spec", GROUPS)
def test_balls_are_nested(spec):
    assert set(spec.ball(1)) <= set(spec.ball(2))


def test_enumeration_cap():
    with pytest.raises(ResourceLimit):
        FreeGroup(3).ball(6, cap=1000)


@pytest.mark.parametrize("spec", GROUPS)
def test_associativity(spec):
    rng = np.random.default_rng(1)
    for g, h, k in zip(*[_random_elements(spec, rng, 100) for _ in range(3)]):
        assert spec.multiply(spec.multiply(g, h), k) == spec.multiply(g, spec.multiply(h, k))


@pytest.mark.parametrize("spec", GROUPS)
def test_identity_and_inverse(spec):
    rng = np.random.default_rng(2)
    for g in _random_elements(spec, rng, 30):
        assert spec.multiply(spec.identity, g) == g == spec.multiply(g, spec.identity)
        assert spec.multiply(g, spec.invert(g)) == spec.identity


@pytest.mark.parametrize("spec", GROUPS)
def test_inverse_generators_listed(spec):
    for name, inverse in spec.inverse_names.items():
        assert spec.multiply(spec.generator(name), spec.generator(inverse)) == spec.identity


@pytest.mark.parametrize("spec", GROUPS + [NaturalsSemigroup()])
def test_word_for_evaluates_back(spec):
    for g in spec.ball(3):
        assert spec.evaluate_word(spec.word_for(g)) == g


@pytest.mark.parametrize("spec", GROUPS)
def test_defining_relations_hold(spec):
    for lhs, rhs in spec.defining_relations():
        assert spec.evaluate_word(lhs) == spec.evaluate_word(rhs)


def test_word_metric_examples():
    z, f2 = ZdGroup(1), FreeGroup(2)
    assert word_metric(z.element((2,)), z.element((5,)), z) == 3
    g = f2.parse_element('aB')
    assert word_metric(g, g, f2) == 0
    assert word_metric(f2.identity, f2.parse_element('abA'), f2) == 3


def test_semigroup_distance_may_be_infinite():
    n = NaturalsSemigroup()
    assert n.word_metric(n.element((2,)), n.element((5,))) == 3
    assert n.word_metric(n.element((5,)), n.element((2,))) == math.inf


@pytest.mark.parametrize("spec", [ZdGroup(2), SymmetricGroup(4), HeisenbergGroup(), LamplighterGroup()])
def test_closed_form_lengths_match_breadth_first_search(spec):
    tree = spec.ball_tree(3)
    for g, (_, _, depth) in tree.items():
        assert spec.word_length(g) == depth


@pytest.mark.parametrize("spec", GROUPS)
def test_word_metric_left_invariant_and_symmetric(spec):
    rng = np.random.default_rng(3)
    for g, h, k in zip(*[_random_elements(spec, rng, 20, radius=2) for _ in range(3)]):
        d = spec.word_metric(g, h)
        assert d == spec.word_metric(h, g)
        assert spec.word_metric(spec.multiply(k, g), spec.multiply(k, h)) == d


@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(-30, 30))
@settings(max_examples=50, deadline=None)
def test_word_metric_triangle_inequality(x, y, z):
    spec = ZdGroup(1)
    a, b, c = (spec.element((v,)) for v in (x, y, z))
    assert spec.word_metric(a, c) <= spec.word_metric(a, b) + spec.word_metric(b, c)


def test_finite_groups_report_order_and_diameter():
    assert CyclicGroup(6).diameter() == 3
    assert len(SymmetricGroup(4).elements()) == 24
    assert DirectProduct((CyclicGroup(2), CyclicGroup(3))).order == 6
    with pytest.raises(UnsupportedOperation):
        ZdGroup(1).diameter()


@pytest.mark.parametrize("data,key", [
    ({"kind": "zd", "d": 2}, 'Z^2'),
    ({"kind": "cyclic", "n": 5}, 'C_5'),
    ({"kind": "free_group", "rank": 2}, 'F_2'),
    ({"kind": "heisenberg"}, 'H_3'),
    ({"kind": "lamplighter"}, 'L_2'),
    ({"kind": "naturals"}, 'N'),
    ({"kind": "direct_product", "factors": [{"kind": "zd"}, {"kind": "cyclic", "n": 2}]}, 'Z^1 x C_2'),
])
def test_group_from_json(data, key):
    spec = group_from_json(data)
    assert spec.key == key
    assert group_from_json(spec.to_json()).key == key


def test_group_from_json_rejects_unknown_kind():
    with pytest.raises(InvalidArgument):
        group_from_json({"kind": "monster"})


def test_load_group_missing_file(tmp_path):
    with pytest.raises(InvalidArgument):
        load_group(tmp_path / 'absent.json')


def test_lamplighter_element_json():
    spec = LamplighterGroup()
    g = spec.evaluate_word(['t', 's', 't', 's'])
    assert spec.serialize_element(g) == {'lamps': [0, 1], 'position': 2}
    assert spec.parse_element({'lamps': [1, 0], 'position': 2}) == g
