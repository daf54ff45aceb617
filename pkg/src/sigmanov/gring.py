"""Exact group-ring arithmetic over the rationals.

A GroupRingElement is a finite formal sum of group elements with nonzero
Fraction coefficients, stored as a dict {element data: Fraction}.  All
operations are pure; elements should be treated as immutable once built.
"""

from fractions import Fraction

from .errors import SpecMismatchError
from .groups import GroupSpec, Character

INF = float("inf")


class GroupRingElement:
    __slots__ = ("spec", "terms")

    def __init__(self, spec: GroupSpec, terms=None):
        self.spec = spec
        clean = {}
        if terms:
            for g, c in terms.items():
                c = c if isinstance(c, Fraction) else Fraction(c)
                if c != 0:
                    clean[g] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero(spec):
        return GroupRingElement(spec, {})

    @staticmethod
    def one(spec):
        return GroupRingElement(spec, {spec.identity(): Fraction(1)})

    @staticmethod
    def of(spec, data, coeff=1):
        return GroupRingElement(spec, {data: Fraction(coeff)})

    # -- predicates ---------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def _check(self, other):
        if self.spec != other.spec:
            raise SpecMismatchError("group ring elements over different specs")

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for g, c in other.terms.items():
            s = out.get(g, 0) + c
            if s:
                out[g] = s
            else:
                out.pop(g, None)
        return GroupRingElement(self.spec, out)

    def __neg__(self):
        return GroupRingElement(self.spec, {g: -c for g, c in self.terms.items()})

    def __sub__(self, other):
        self._check(other)
        out = dict(self.terms)
        for g, c in other.terms.items():
            s = out.get(g, 0) - c
            if s:
                out[g] = s
            else:
                out.pop(g, None)
        return GroupRingElement(self.spec, out)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        mul = self.spec.multiply
        out = {}
        for g, c in self.terms.items():
            for h, d in other.terms.items():
                k = mul(g, h)
                s = out.get(k, 0) + c * d
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
        return GroupRingElement(self.spec, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, c):
        c = Fraction(c)
        if c == 0:
            return GroupRingElement.zero(self.spec)
        return GroupRingElement(self.spec, {g: c * v for g, v in self.terms.items()})

    def __eq__(self, other):
        return (isinstance(other, GroupRingElement) and self.spec == other.spec
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.spec, frozenset(self.terms.items())))

    # -- grading -------------------------------------------------------------
    def min_degree(self, character: Character):
        """Minimum phi-value over the support; +inf for the zero element."""
        if not self.terms:
            return INF
        return min(character(g) for g in self.terms)

    def max_degree(self, character: Character):
        if not self.terms:
            return -INF
        return max(character(g) for g in self.terms)

    def truncate(self, character: Character, radius) -> "GroupRingElement":
        """Keep terms with phi(g) <= radius."""
        kept = {g: c for g, c in self.terms.items() if character(g) <= radius}
        return GroupRingElement(self.spec, kept)

    def slice_above(self, character: Character, radius) -> "GroupRingElement":
        kept = {g: c for g, c in self.terms.items() if character(g) > radius}
        return GroupRingElement(self.spec, kept)

    # -- io -------------------------------------------------------------------
    def sorted_terms(self):
        key = self.spec.sort_key
        return sorted(self.terms.items(), key=lambda t: key(t[0]))

    def to_json(self):
        return [{"word": self.spec.data_to_json(g), "coeff": str(c)}
                for g, c in self.sorted_terms()]

    @staticmethod
    def from_json(spec, obj):
        terms = {}
        for entry in obj:
            g = spec.data_from_json(entry["word"])
            c = Fraction(entry["coeff"])
            terms[g] = terms.get(g, 0) + c
        return GroupRingElement(spec, terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for g, c in self.sorted_terms():
            word = self.spec.data_to_json(g)
            word = word if isinstance(word, str) and word else str(word) if word != "" else "1"
            bits.append(f"{c}*{word or '1'}")
        return " + ".join(bits)
