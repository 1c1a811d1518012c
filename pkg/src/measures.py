"""
Molecular Measures
Finitely supported signed measures on a group, the convolution action and the means among them
"""

import logging
import math
from types import MappingProxyType
from typing import TYPE_CHECKING, Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import InvalidArgument
from .groups import Element, GroupSpec

if TYPE_CHECKING:
    from .testfn import TestFunction

logger = logging.getLogger(__name__)


class MolecularMeasure:
    """
    Finite linear combination of point masses

    Coefficients are stored sparsely; an exactly zero coefficient is never
    stored. Instances are immutable.
    """

    def __init__(self, spec: GroupSpec, weights: Optional[Mapping[Element, float]] = None):
        weights = weights or {}
        spec.check(*weights)
        self.spec = spec
        self._weights = MappingProxyType({g: float(c) for g, c in weights.items() if c != 0})

    @property
    def weights(self) -> Mapping[Element, float]:
        return self._weights

    @property
    def support(self) -> List[Element]:
        return sorted(self._weights)

    def items(self) -> List[Tuple[Element, float]]:
        """(element, coefficient) pairs sorted by element"""
        return [(g, self._weights[g]) for g in self.support]

    def coefficient(self, g: Element) -> float:
        return self._weights.get(g, 0.0)

    @property
    def total_mass(self) -> float:
        return math.fsum(c for _, c in self.items())

    def __len__(self) -> int:
        return len(self._weights)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MolecularMeasure):
            return NotImplemented
        return self.spec.key == other.spec.key and dict(self._weights) == dict(other._weights)

    def __hash__(self):
        return hash((self.spec.key, frozenset(self._weights.items())))

    def __add__(self, other: 'MolecularMeasure') -> 'MolecularMeasure':
        return combine([(1.0, self), (1.0, other)])

    def __sub__(self, other: 'MolecularMeasure') -> 'MolecularMeasure':
        return combine([(1.0, self), (-1.0, other)])

    def __neg__(self) -> 'MolecularMeasure':
        return combine([(-1.0, self)])

    def __mul__(self, scalar: float) -> 'MolecularMeasure':
        return combine([(float(scalar), self)])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        terms = ', '.join(f"{self.spec.serialize_element(g)!r}: {c:.6g}" for g, c in self.items())
        return f"MolecularMeasure({self.spec.key}; {{{terms}}})"


def zero_measure(spec: GroupSpec) -> MolecularMeasure:
    return MolecularMeasure(spec)


def point_mass(s: Element) -> MolecularMeasure:
    """The point mass at s: f -> f(s)"""
    return MolecularMeasure(s.spec, {s: 1.0})


def combine(terms: Sequence[Tuple[float, MolecularMeasure]], spec: Optional[GroupSpec] = None) -> MolecularMeasure:
    """
    Coefficient-wise linear combination of measures

    Args:
        terms: (scalar, measure) pairs, all on one group
        spec: Group of the result (required when terms is empty)

    Returns:
        The combination in canonical sparse form
    """
    if not terms and spec is None:
        raise InvalidArgument("combine needs at least one term or an explicit spec")
    spec = spec or terms[0][1].spec
    weights: Dict[Element, float] = {}
    for scalar, measure in terms:
        if measure.spec.key != spec.key:
            raise InvalidArgument(f"Cannot combine measures on {spec.key} and {measure.spec.key}")
        for g, c in measure.items():
            weights[g] = weights.get(g, 0.0) + scalar * c
    return MolecularMeasure(spec, weights)


def uniform(elements: Iterable[Element]) -> MolecularMeasure:
    """Uniform mean on a finite nonempty set of elements"""
    elements = sorted(set(elements))
    if not elements:
        raise InvalidArgument("A uniform mean needs a nonempty support")
    weight = 1.0 / len(elements)
    return MolecularMeasure(elements[0].spec, {g: weight for g in elements})


def evaluate(mu: MolecularMeasure, f: Union['TestFunction', Callable[[Element], float]]) -> float:
    """mu(f) = sum of c_i f(s_i) over the support"""
    return sum(c * f(g) for g, c in mu.items())


def convolve_left(s: Element, mu: MolecularMeasure) -> MolecularMeasure:
    """s * mu: push mu forward by left multiplication with s"""
    mu.spec.check(s)
    weights: Dict[Element, float] = {}
    for g, c in mu.items():
        h = mu.spec.multiply(s, g)
        weights[h] = weights.get(h, 0.0) + c
    return MolecularMeasure(mu.spec, weights)


def convolve_right(mu: MolecularMeasure, s: Element) -> MolecularMeasure:
    """mu * s: push mu forward by right multiplication with s"""
    mu.spec.check(s)
    weights: Dict[Element, float] = {}
    for g, c in mu.items():
        h = mu.spec.multiply(g, s)
        weights[h] = weights.get(h, 0.0) + c
    return MolecularMeasure(mu.spec, weights)


def tv_norm(mu: MolecularMeasure) -> float:
    """Total variation norm, sum of |c_i| (so |delta(a) - delta(b)| = 2)"""
    return sum(abs(c) for _, c in mu.items())


def is_mean(mu: MolecularMeasure, tol: float = 0.0) -> bool:
    """True iff every coefficient is >= -tol and the total mass is within tol of 1"""
    if tol < 0:
        raise InvalidArgument(f"Tolerance must be nonnegative (got {tol})")
    if any(c < -tol for c in mu.weights.values()):
        return False
    return abs(mu.total_mass - 1.0) <= tol


# --- JSON ------------------------------------------------------------------------------------


def measure_to_json(mu: MolecularMeasure, prune: float = 0.0) -> List[Dict[str, Any]]:
    """
    Serialize as [{"element": ..., "weight": ...}] sorted by element

    Args:
        mu: Measure to serialize
        prune: Drop coefficients with |c| <= prune (0 keeps everything)
    """
    return [
        {'element': mu.spec.serialize_element(g), 'weight': c}
        for g, c in mu.items()
        if abs(c) > prune
    ]


def measure_from_json(data: List[Dict[str, Any]], spec: GroupSpec) -> MolecularMeasure:
    if not isinstance(data, list):
        raise InvalidArgument(f"A measure must be a JSON array (got {type(data).__name__})")
    weights: Dict[Element, float] = {}
    for entry in data:
        try:
            g = spec.parse_element(entry['element'])
            weights[g] = weights.get(g, 0.0) + float(entry['weight'])
        except (KeyError, TypeError) as e:
            raise InvalidArgument(f"Malformed measure entry {entry!r}: {e}")
    return MolecularMeasure(spec, weights)
