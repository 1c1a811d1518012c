"""
Finitely Generated Groups and Semigroups
Exact normal forms, generators, word metric and Cayley-ball enumeration
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .config import Config
from .errors import InvalidArgument, ResourceLimit, UnsupportedOperation

logger = logging.getLogger(__name__)

# Each relation is a pair of words with equal products.
Relation = Tuple[List[str], List[str]]


@dataclass(frozen=True, order=True)
class Element:
    """A group element in canonical normal form; ordering is by normal form"""

    key: str
    form: tuple
    spec: 'GroupSpec' = field(compare=False, repr=False)

    def __mul__(self, other: 'Element') -> 'Element':
        return self.spec.multiply(self, other)

    def to_json(self) -> Any:
        return self.spec.serialize_element(self)


class GroupSpec(ABC):
    """
    A finitely generated group or semigroup

    Subclasses fix the normal form, the generator convention and the
    multiplication. Everything else (balls, word metric, words) is built on
    those primitives.
    """

    kind: str = ''
    has_inverses: bool = True

    # --- primitives supplied by each kind -------------------------------------------------

    @property
    @abstractmethod
    def key(self) -> str:
        """Short canonical name, e.g. 'F_2'"""

    @abstractmethod
    def _identity_form(self) -> tuple:
        ...

    @abstractmethod
    def _multiply_forms(self, a: tuple, b: tuple) -> tuple:
        ...

    def _invert_form(self, a: tuple) -> tuple:
        raise UnsupportedOperation(f"{self.key} has no inverses")

    @abstractmethod
    def _generator_forms(self) -> Dict[str, tuple]:
        ...

    @abstractmethod
    def _canonical_form(self, form: Any) -> tuple:
        """Return the canonical normal form or raise InvalidArgument"""

    @abstractmethod
    def _form_to_json(self, form: tuple) -> Any:
        ...

    @abstractmethod
    def _form_from_json(self, data: Any) -> tuple:
        ...

    @abstractmethod
    def _word_for_form(self, form: tuple) -> List[str]:
        ...

    @abstractmethod
    def defining_relations(self) -> List[Relation]:
        """Pairs of generator words with equal products"""

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        ...

    # --- elements --------------------------------------------------------------------------

    @cached_property
    def identity(self) -> Element:
        return Element(self.key, self._identity_form(), self)

    @cached_property
    def generators(self) -> Dict[str, Element]:
        return {name: Element(self.key, form, self) for name, form in self._generator_forms().items()}

    @property
    def generator_names(self) -> List[str]:
        return list(self.generators)

    @cached_property
    def inverse_names(self) -> Dict[str, str]:
        """Generator name -> name of its inverse generator (groups only)"""
        if not self.has_inverses:
            return {}
        by_element = {g: name for name, g in self.generators.items()}
        return {name: by_element[self.invert(g)] for name, g in self.generators.items()}

    def element(self, form: Any) -> Element:
        """Wrap a normal form, validating it"""
        return Element(self.key, self._canonical_form(form), self)

    def check(self, *elements: Element):
        """Raise InvalidArgument unless every element belongs to this spec"""
        for g in elements:
            if not isinstance(g, Element) or g.key != self.key:
                raise InvalidArgument(f"Element {g!r} does not belong to {self.key}")

    def serialize_element(self, g: Element) -> Any:
        self.check(g)
        return self._form_to_json(g.form)

    def parse_element(self, data: Any) -> Element:
        return self.element(self._form_from_json(data))

    def generator(self, name: str) -> Element:
        try:
            return self.generators[name]
        except KeyError:
            raise InvalidArgument(f"{self.key} has no generator named {name!r} "
                                  f"(generators: {', '.join(self.generators)})")

    # --- arithmetic ------------------------------------------------------------------------

    def multiply(self, g: Element, h: Element) -> Element:
        self.check(g, h)
        return Element(self.key, self._multiply_forms(g.form, h.form), self)

    def invert(self, g: Element) -> Element:
        self.check(g)
        if not self.has_inverses:
            raise UnsupportedOperation(f"invert is not defined on the semigroup {self.key}")
        return Element(self.key, self._invert_form(g.form), self)

    def evaluate_word(self, names: Sequence[str]) -> Element:
        """Product of the named generators, left to right"""
        result = self.identity
        for name in names:
            result = self.multiply(result, self.generator(name))
        return result

    def word_for(self, g: Element) -> List[str]:
        """A word over the generators whose product is g"""
        self.check(g)
        return self._word_for_form(g.form)

    # --- enumeration -----------------------------------------------------------------------

    @cached_property
    def _tree_cache(self) -> Dict[int, Dict[Element, Tuple[Optional[Element], Optional[str], int]]]:
        return {}

    def ball_tree(self, r: int, cap: Optional[int] = None) -> Dict[Element, Tuple[Optional[Element], Optional[str], int]]:
        """
        Breadth-first enumeration of the Cayley ball by left multiplication

        Args:
            r: Radius (word length bound)
            cap: Enumeration cap (defaults to Config)

        Returns:
            Dict element -> (parent, generator name, word length) with
            element = generator * parent
        """
        if r < 0:
            raise InvalidArgument(f"Radius must be nonnegative (got {r})")
        limit = Config.cap(cap)

        cached = self._tree_cache.get(r)
        if cached is None:
            larger = [radius for radius in self._tree_cache if radius > r]
            if larger:
                source = self._tree_cache[min(larger)]
                cached = {g: entry for g, entry in source.items() if entry[2] <= r}
                self._tree_cache[r] = cached
        if cached is None:
            tree = {self.identity: (None, None, 0)}
            frontier = [self.identity]
            for depth in range(1, r + 1):
                grown = []
                for g in frontier:
                    for name, s in self.generators.items():
                        h = self.multiply(s, g)
                        if h not in tree:
                            tree[h] = (g, name, depth)
                            grown.append(h)
                            if len(tree) > limit:
                                raise ResourceLimit(
                                    f"Ball of radius {r} in {self.key} exceeds the enumeration cap {limit}"
                                )
                if not grown:
                    break
                frontier = grown
            self._tree_cache[r] = tree
            cached = tree
            logger.debug(f"Enumerated ball of radius {r} in {self.key}: {len(tree)} elements")

        if len(cached) > limit:
            raise ResourceLimit(f"Ball of radius {r} in {self.key} exceeds the enumeration cap {limit}")
        return cached

    def ball(self, r: int, cap: Optional[int] = None) -> List[Element]:
        """All elements of word length <= r, sorted by normal form"""
        return sorted(self.ball_tree(r, cap))

    @property
    def is_finite(self) -> bool:
        return False

    @property
    def order(self) -> Optional[int]:
        return None

    def diameter(self, cap: Optional[int] = None) -> int:
        """Smallest r with ball(r) equal to the whole (finite) group"""
        if not self.is_finite:
            raise UnsupportedOperation(f"{self.key} is infinite")
        r = 0
        while len(self.ball_tree(r, cap)) < self.order:
            r += 1
        return r

    def elements(self, cap: Optional[int] = None) -> List[Element]:
        """Every element of a finite group, sorted"""
        return self.ball(self.diameter(cap), cap)

    # --- word metric -----------------------------------------------------------------------

    def word_length(self, g: Element, limit: Optional[int] = None) -> float:
        """
        Word length of g over the generators

        The generic version searches growing balls; math.inf is returned when
        g is unreachable or not found within `limit`.
        """
        self.check(g)
        if g == self.identity:
            return 0
        previous = 1
        r = 1
        while limit is None or r <= limit:
            tree = self.ball_tree(r)
            if g in tree:
                return tree[g][2]
            if len(tree) == previous:
                return math.inf
            previous = len(tree)
            r += 1
        return math.inf

    def word_metric(self, g: Element, h: Element, limit: Optional[int] = None) -> float:
        """
        Word distance from g to h

        For groups this is the length of g^-1 h. For semigroups it is the
        shortest w with g*w = h, math.inf when no such word exists.
        """
        self.check(g, h)
        if self.has_inverses:
            return self.word_length(self.multiply(self.invert(g), h), limit)
        return self._quasi_distance(g, h, limit)

    def _quasi_distance(self, g: Element, h: Element, limit: Optional[int]) -> float:
        if g == h:
            return 0
        seen = {g}
        frontier = [g]
        depth = 0
        bound = Config.cap()
        while frontier and (limit is None or depth < limit):
            depth += 1
            grown = []
            for x in frontier:
                for s in self.generators.values():
                    y = self.multiply(x, s)
                    if y == h:
                        return depth
                    if y not in seen:
                        seen.add(y)
                        grown.append(y)
            if len(seen) > bound:
                return math.inf
            frontier = grown
        return math.inf

    def __str__(self) -> str:
        return self.key


# --- kinds -----------------------------------------------------------------------------------


def _as_int(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidArgument(f"{what} must be an integer (got {value!r})")
    return value


@dataclass(frozen=True)
class ZdGroup(GroupSpec):
    """The free abelian group Z^d with generators +-unit vectors"""

    d: int = 1
    kind = 'zd'

    def __post_init__(self):
        if _as_int(self.d, 'd') < 1:
            raise InvalidArgument(f"Z^d needs d >= 1 (got {self.d})")

    @property
    def key(self) -> str:
        return f"Z^{self.d}"

    def _identity_form(self):
        return (0,) * self.d

    def _multiply_forms(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def _invert_form(self, a):
        return tuple(-x for x in a)

    def _generator_forms(self):
        forms = {}
        for i in range(self.d):
            unit = tuple(1 if j == i else 0 for j in range(self.d))
            forms[f"+{i + 1}"] = unit
            forms[f"-{i + 1}"] = tuple(-x for x in unit)
        return forms

    def _canonical_form(self, form):
        form = tuple(_as_int(x, 'coordinate') for x in form)
        if len(form) != self.d:
            raise InvalidArgument(f"Z^{self.d} element needs {self.d} coordinates (got {len(form)})")
        return form

    def _form_to_json(self, form):
        return list(form)

    def _form_from_json(self, data):
        if isinstance(data, int) and self.d == 1:
            return (data,)
        if not isinstance(data, list):
            raise InvalidArgument(f"Z^{self.d} element must be an array (got {data!r})")
        return tuple(data)

    def _word_for_form(self, form):
        word = []
        for i, x in enumerate(form):
            word.extend([f"+{i + 1}" if x > 0 else f"-{i + 1}"] * abs(x))
        return word

    def word_length(self, g, limit=None):
        self.check(g)
        return sum(abs(x) for x in g.form)

    def defining_relations(self):
        relations = [([f"+{i}", f"-{i}"], []) for i in range(1, self.d + 1)]
        for i in range(1, self.d + 1):
            for j in range(i + 1, self.d + 1):
                relations.append(([f"+{i}", f"+{j}"], [f"+{j}", f"+{i}"]))
        return relations

    def to_json(self):
        return {'kind': 'zd', 'd': self.d}


@dataclass(frozen=True)
class CyclicGroup(GroupSpec):
    """The finite cyclic group C_n = Z/nZ with generators +1 and -1"""

    n: int = 2
    kind = 'cyclic'

    def __post_init__(self):
        if _as_int(self.n, 'n') < 1:
            raise InvalidArgument(f"C_n needs n >= 1 (got {self.n})")

    @property
    def key(self):
        return f"C_{self.n}"

    def _identity_form(self):
        return (0,)

    def _multiply_forms(self, a, b):
        return ((a[0] + b[0]) % self.n,)

    def _invert_form(self, a):
        return ((-a[0]) % self.n,)

    def _generator_forms(self):
        if self.n == 1:
            return {}
        if self.n == 2:
            return {'+1': (1,)}
        return {'+1': (1,), '-1': (self.n - 1,)}

    def _canonical_form(self, form):
        (k,) = form
        k = _as_int(k, 'residue')
        if not 0 <= k < self.n:
            raise InvalidArgument(f"C_{self.n} element must lie in 0..{self.n - 1} (got {k})")
        return (k,)

    def _form_to_json(self, form):
        return form[0]

    def _form_from_json(self, data):
        return (data,)

    def _word_for_form(self, form):
        k = form[0]
        if self.n <= 2 or k <= self.n - k:
            return ['+1'] * k
        return ['-1'] * (self.n - k)

    def word_length(self, g, limit=None):
        self.check(g)
        k = g.form[0]
        return min(k, self.n - k)

    @property
    def is_finite(self):
        return True

    @property
    def order(self):
        return self.n

    def defining_relations(self):
        if self.n == 1:
            return []
        relations = [(['+1'] * self.n, [])]
        if self.n > 2:
            relations.append((['+1', '-1'], []))
        return relations

    def to_json(self):
        return {'kind': 'cyclic', 'n': self.n}


@dataclass(frozen=True)
class SymmetricGroup(GroupSpec):
    """
    The symmetric group S_n with adjacent transpositions s1..s{n-1}

    Elements are image tuples p with p[i] the image of i (0-based); products
    compose right to left: (g*h)(i) = g(h(i)). JSON uses 1-based one-line
    notation.
    """

    n: int = 3
    kind = 'symmetric'

    def __post_init__(self):
        if _as_int(self.n, 'n') < 1:
            raise InvalidArgument(f"S_n needs n >= 1 (got {self.n})")

    @property
    def key(self):
        return f"S_{self.n}"

    def _identity_form(self):
        return tuple(range(self.n))

    def _multiply_forms(self, a, b):
        return tuple(a[b[i]] for i in range(self.n))

    def _invert_form(self, a):
        inverse = [0] * self.n
        for i, image in enumerate(a):
            inverse[image] = i
        return tuple(inverse)

    def _transposition(self, i: int) -> tuple:
        p = list(range(self.n))
        p[i - 1], p[i] = p[i], p[i - 1]
        return tuple(p)

    def _generator_forms(self):
        return {f"s{i}": self._transposition(i) for i in range(1, self.n)}

    def _canonical_form(self, form):
        form = tuple(_as_int(x, 'image') for x in form)
        if sorted(form) != list(range(self.n)):
            raise InvalidArgument(f"{form!r} is not a permutation of 0..{self.n - 1}")
        return form

    def _form_to_json(self, form):
        return [x + 1 for x in form]

    def _form_from_json(self, data):
        if not isinstance(data, list):
            raise InvalidArgument(f"S_{self.n} element must be an array (got {data!r})")
        return tuple(_as_int(x, 'image') - 1 for x in data)

    def _word_for_form(self, form):
        # Peel descents off the right: g = (g * s_i) * s_i
        current = list(form)
        suffix = []
        while True:
            for i in range(self.n - 1):
                if current[i] > current[i + 1]:
                    current[i], current[i + 1] = current[i + 1], current[i]
                    suffix.append(f"s{i + 1}")
                    break
            else:
                break
        return list(reversed(suffix))

    def word_length(self, g, limit=None):
        self.check(g)
        p = g.form
        return sum(1 for i in range(self.n) for j in range(i + 1, self.n) if p[i] > p[j])

    @property
    def is_finite(self):
        return True

    @property
    def order(self):
        return math.factorial(self.n)

    def defining_relations(self):
        relations = []
        for i in range(1, self.n):
            relations.append(([f"s{i}", f"s{i}"], []))
            if i + 1 < self.n:
                relations.append(([f"s{i}", f"s{i + 1}"] * 3, []))
            for j in range(i + 2, self.n):
                relations.append(([f"s{i}", f"s{j}"], [f"s{j}", f"s{i}"]))
        return relations

    def to_json(self):
        return {'kind': 'symmetric', 'n': self.n}


_LETTERS = 'abcdefghijklmnopqrstuvwxyz'


@dataclass(frozen=True)
class FreeGroup(GroupSpec):
    """
    The free group on `rank` letters a, b, c, ...

    Reduced words are tuples of nonzero integers, +k for the k-th letter and
    -k for its inverse; inverses print as uppercase letters.
    """

    rank: int = 2
    kind = 'free_group'

    def __post_init__(self):
        if not 1 <= _as_int(self.rank, 'rank') <= len(_LETTERS):
            raise InvalidArgument(f"Free group rank must lie in 1..{len(_LETTERS)} (got {self.rank})")

    @property
    def key(self):
        return f"F_{self.rank}"

    def _identity_form(self):
        return ()

    def _multiply_forms(self, a, b):
        out = list(a)
        for letter in b:
            if out and out[-1] == -letter:
                out.pop()
            else:
                out.append(letter)
        return tuple(out)

    def _invert_form(self, a):
        return tuple(-x for x in reversed(a))

    @staticmethod
    def _name(letter: int) -> str:
        name = _LETTERS[abs(letter) - 1]
        return name if letter > 0 else name.upper()

    def _generator_forms(self):
        forms = {}
        for k in range(1, self.rank + 1):
            forms[self._name(k)] = (k,)
            forms[self._name(-k)] = (-k,)
        return forms

    def _canonical_form(self, form):
        form = tuple(_as_int(x, 'letter') for x in form)
        for i, x in enumerate(form):
            if x == 0 or abs(x) > self.rank:
                raise InvalidArgument(f"Letter {x} is outside F_{self.rank}")
            if i and form[i - 1] == -x:
                raise InvalidArgument(f"Word {form!r} is not reduced")
        return form

    def _form_to_json(self, form):
        return ''.join(self._name(x) for x in form)

    def _form_from_json(self, data):
        if not isinstance(data, str):
            raise InvalidArgument(f"F_{self.rank} element must be a string (got {data!r})")
        letters = []
        for ch in data:
            k = _LETTERS.find(ch.lower()) + 1
            if k == 0:
                raise InvalidArgument(f"Unknown letter {ch!r}")
            letters.append(k if ch.islower() else -k)
        return self._multiply_forms((), tuple(letters))

    def _word_for_form(self, form):
        return [self._name(x) for x in form]

    def word_length(self, g, limit=None):
        self.check(g)
        return len(g.form)

    def defining_relations(self):
        return [([self._name(k), self._name(-k)], []) for k in range(1, self.rank + 1)]

    def to_json(self):
        return {'kind': 'free_group', 'rank': self.rank}


# z = x y x^-1 y^-1 and its inverse
_Z_WORD = ['x', 'y', 'X', 'Y']
_Z_INVERSE_WORD = ['y', 'x', 'Y', 'X']


@dataclass(frozen=True)
class HeisenbergGroup(GroupSpec):
    """
    The integer Heisenberg group with (a,b,c)*(a',b',c') = (a+a', b+b', c+c'+a*b')

    Generators x = (1,0,0), y = (0,1,0) and their inverses X, Y.
    """

    kind = 'heisenberg'

    @property
    def key(self):
        return 'H_3'

    def _identity_form(self):
        return (0, 0, 0)

    def _multiply_forms(self, a, b):
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def _invert_form(self, a):
        return (-a[0], -a[1], -a[2] + a[0] * a[1])

    def _generator_forms(self):
        return {'x': (1, 0, 0), 'X': (-1, 0, 0), 'y': (0, 1, 0), 'Y': (0, -1, 0)}

    def _canonical_form(self, form):
        form = tuple(_as_int(x, 'coordinate') for x in form)
        if len(form) != 3:
            raise InvalidArgument(f"Heisenberg element needs 3 coordinates (got {len(form)})")
        return form

    def _form_to_json(self, form):
        return list(form)

    def _form_from_json(self, data):
        if not isinstance(data, list):
            raise InvalidArgument(f"Heisenberg element must be an array (got {data!r})")
        return tuple(data)

    def _word_for_form(self, form):
        a, b, c = form
        k = c - a * b
        word = (_Z_WORD if k > 0 else _Z_INVERSE_WORD) * abs(k)
        word += ['x' if a > 0 else 'X'] * abs(a)
        word += ['y' if b > 0 else 'Y'] * abs(b)
        return word

    def defining_relations(self):
        return [
            (['x', 'X'], []),
            (['y', 'Y'], []),
            (['x'] + _Z_WORD, _Z_WORD + ['x']),
            (['y'] + _Z_WORD, _Z_WORD + ['y']),
        ]

    def to_json(self):
        return {'kind': 'heisenberg'}


@dataclass(frozen=True)
class LamplighterGroup(GroupSpec):
    """
    The lamplighter group Z/2 wr Z

    Elements are (lit lamp positions, lighter position) with
    (f, x)*(g, y) = (f xor (g shifted by x), x + y). Generators: toggle t,
    shift s and its inverse S.
    """

    kind = 'lamplighter'

    @property
    def key(self):
        return 'L_2'

    def _identity_form(self):
        return ((), 0)

    def _multiply_forms(self, a, b):
        lamps = set(a[0]).symmetric_difference(k + a[1] for k in b[0])
        return (tuple(sorted(lamps)), a[1] + b[1])

    def _invert_form(self, a):
        return (tuple(sorted(k - a[1] for k in a[0])), -a[1])

    def _generator_forms(self):
        return {'t': ((0,), 0), 's': ((), 1), 'S': ((), -1)}

    def _canonical_form(self, form):
        lamps, position = form
        lamps = [_as_int(k, 'lamp') for k in lamps]
        if len(set(lamps)) != len(lamps):
            raise InvalidArgument(f"Lamp positions must be distinct (got {lamps!r})")
        return (tuple(sorted(lamps)), _as_int(position, 'position'))

    def _form_to_json(self, form):
        return {'lamps': list(form[0]), 'position': form[1]}

    def _form_from_json(self, data):
        if not isinstance(data, dict):
            raise InvalidArgument(f"Lamplighter element must be an object (got {data!r})")
        return (tuple(data.get('lamps', [])), data.get('position', 0))

    @staticmethod
    def _shift(k: int) -> List[str]:
        return ['s' if k > 0 else 'S'] * abs(k)

    def _word_for_form(self, form):
        word = []
        for k in form[0]:
            word += self._shift(k) + ['t'] + self._shift(-k)
        word += self._shift(form[1])
        reduced = []
        for name in word:
            if reduced and {reduced[-1], name} == {'s', 'S'}:
                reduced.pop()
            else:
                reduced.append(name)
        return reduced

    def defining_relations(self):
        relations = [(['t', 't'], []), (['s', 'S'], [])]
        for k in (1, 2):
            conjugate = self._shift(k) + ['t'] + self._shift(-k)
            relations.append((['t'] + conjugate, conjugate + ['t']))
        return relations

    def to_json(self):
        return {'kind': 'lamplighter'}


@dataclass(frozen=True)
class NaturalsSemigroup(GroupSpec):
    """The additive semigroup of nonnegative integers, generated by +1"""

    kind = 'naturals'
    has_inverses = False

    @property
    def key(self):
        return 'N'

    def _identity_form(self):
        return (0,)

    def _multiply_forms(self, a, b):
        return (a[0] + b[0],)

    def _generator_forms(self):
        return {'+1': (1,)}

    def _canonical_form(self, form):
        (n,) = form
        if _as_int(n, 'natural') < 0:
            raise InvalidArgument(f"Natural numbers are nonnegative (got {n})")
        return (n,)

    def _form_to_json(self, form):
        return form[0]

    def _form_from_json(self, data):
        return (data,)

    def _word_for_form(self, form):
        return ['+1'] * form[0]

    def word_length(self, g, limit=None):
        self.check(g)
        return g.form[0]

    def _quasi_distance(self, g, h, limit):
        gap = h.form[0] - g.form[0]
        return gap if gap >= 0 else math.inf

    def defining_relations(self):
        return []

    def to_json(self):
        return {'kind': 'naturals'}


@dataclass(frozen=True)
class DirectProduct(GroupSpec):
    """
    Direct product of groups or semigroups

    Generators are the factors' generators, prefixed with the factor index
    ('0:+1', '1:a', ...). Word lengths add across factors.
    """

    factors: Tuple[GroupSpec, ...] = ()
    kind = 'direct_product'

    def __post_init__(self):
        if len(self.factors) < 1:
            raise InvalidArgument("A direct product needs at least one factor")

    @property
    def key(self):
        return ' x '.join(f.key for f in self.factors)

    @property
    def has_inverses(self):
        return all(f.has_inverses for f in self.factors)

    def _identity_form(self):
        return tuple(f._identity_form() for f in self.factors)

    def _multiply_forms(self, a, b):
        return tuple(f._multiply_forms(x, y) for f, x, y in zip(self.factors, a, b))

    def _invert_form(self, a):
        return tuple(f._invert_form(x) for f, x in zip(self.factors, a))

    def _generator_forms(self):
        identity = self._identity_form()
        forms = {}
        for i, factor in enumerate(self.factors):
            for name, form in factor._generator_forms().items():
                forms[f"{i}:{name}"] = identity[:i] + (form,) + identity[i + 1:]
        return forms

    def _canonical_form(self, form):
        form = tuple(form)
        if len(form) != len(self.factors):
            raise InvalidArgument(f"{self.key} element needs {len(self.factors)} components")
        return tuple(f._canonical_form(x) for f, x in zip(self.factors, form))

    def _form_to_json(self, form):
        return [f._form_to_json(x) for f, x in zip(self.factors, form)]

    def _form_from_json(self, data):
        if not isinstance(data, list) or len(data) != len(self.factors):
            raise InvalidArgument(f"{self.key} element must be an array of {len(self.factors)} components")
        return tuple(f._form_from_json(x) for f, x in zip(self.factors, data))

    def _word_for_form(self, form):
        word = []
        for i, (factor, x) in enumerate(zip(self.factors, form)):
            word += [f"{i}:{name}" for name in factor._word_for_form(x)]
        return word

    def _components(self, g: Element) -> List[Element]:
        return [f.element(x) for f, x in zip(self.factors, g.form)]

    def word_length(self, g, limit=None):
        self.check(g)
        return sum(f.word_length(x, limit) for f, x in zip(self.factors, self._components(g)))

    def word_metric(self, g, h, limit=None):
        self.check(g, h)
        return sum(f.word_metric(x, y, limit)
                   for f, x, y in zip(self.factors, self._components(g), self._components(h)))

    @property
    def is_finite(self):
        return all(f.is_finite for f in self.factors)

    @property
    def order(self):
        if not self.is_finite:
            return None
        return math.prod(f.order for f in self.factors)

    def defining_relations(self):
        relations = []
        for i, factor in enumerate(self.factors):
            for lhs, rhs in factor.defining_relations():
                relations.append(([f"{i}:{n}" for n in lhs], [f"{i}:{n}" for n in rhs]))
        for i, fi in enumerate(self.factors):
            for j in range(i + 1, len(self.factors)):
                for a in fi.generator_names:
                    for b in self.factors[j].generator_names:
                        relations.append(([f"{i}:{a}", f"{j}:{b}"], [f"{j}:{b}", f"{i}:{a}"]))
        return relations

    def to_json(self):
        return {'kind': 'direct_product', 'factors': [f.to_json() for f in self.factors]}


# --- spec-level operations -------------------------------------------------------------------


def multiply(g: Element, h: Element) -> Element:
    """Normal form of g*h; both must come from the same spec"""
    if g.key != h.key:
        raise InvalidArgument(f"Cannot multiply elements of {g.key} and {h.key}")
    return g.spec.multiply(g, h)


def invert(g: Element) -> Element:
    return g.spec.invert(g)


def ball(spec: GroupSpec, r: int, cap: Optional[int] = None) -> List[Element]:
    return spec.ball(r, cap)


def word_metric(g: Element, h: Element, spec: GroupSpec) -> float:
    return spec.word_metric(g, h)


# --- JSON ------------------------------------------------------------------------------------

_KIND_ALIASES = {
    'z': 'zd', 'zd': 'zd',
    'cyclic': 'cyclic', 'finite_cyclic': 'cyclic',
    'symmetric': 'symmetric',
    'free_group': 'free_group', 'free': 'free_group',
    'heisenberg': 'heisenberg',
    'lamplighter': 'lamplighter',
    'naturals': 'naturals', 'nat_add': 'naturals',
    'direct_product': 'direct_product',
}


def group_from_json(data: Dict[str, Any]) -> GroupSpec:
    """
    Build a GroupSpec from its JSON description

    Args:
        data: e.g. {"kind": "free_group", "rank": 2}

    Returns:
        The matching GroupSpec
    """
    if not isinstance(data, dict) or 'kind' not in data:
        raise InvalidArgument(f"Group specification needs a 'kind' field (got {data!r})")

    kind = _KIND_ALIASES.get(str(data['kind']).lower())
    if kind == 'zd':
        return ZdGroup(d=data.get('d', 1))
    if kind == 'cyclic':
        return CyclicGroup(n=data.get('n'))
    if kind == 'symmetric':
        return SymmetricGroup(n=data.get('n'))
    if kind == 'free_group':
        return FreeGroup(rank=data.get('rank', 2))
    if kind == 'heisenberg':
        return HeisenbergGroup()
    if kind == 'lamplighter':
        return LamplighterGroup()
    if kind == 'naturals':
        return NaturalsSemigroup()
    if kind == 'direct_product':
        return DirectProduct(factors=tuple(group_from_json(f) for f in data.get('factors', [])))
    raise InvalidArgument(f"Unknown group kind {data['kind']!r}")


def load_group(path) -> GroupSpec:
    """Read a group specification JSON file"""
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise InvalidArgument(f"Group specification not found: {path}")
    except json.JSONDecodeError as e:
        raise InvalidArgument(f"Group specification {path} is not valid JSON: {e}")
    spec = group_from_json(data)
    logger.info(f"Loaded group {spec.key} from {path}")
    return spec
