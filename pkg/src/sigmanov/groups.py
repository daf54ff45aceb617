"""Supported group classes, element normal forms, characters, support enumeration.

Elements are plain hashable tuples ("data"); the GroupSpec subclass owns all
operations on them.  Normal forms:

  FreeGroup(r)    -- freely reduced word as a tuple of signed 1-based ints,
                     +i for generator i, -i for its inverse.
  FreeAbelian(r)  -- exponent vector, tuple of r ints.
  DirectProduct   -- tuple of factor datas.
  FreeByZ(r, alpha) -- pair (fiber word, t-exponent) for the normal form
                     w * t^n, with the rewriting t*w = alpha(w)*t.

Generators are globally indexed 0-based across a spec: for DirectProduct the
factor generator lists concatenate; for FreeByZ the fiber generators come
first and t is last.  Word strings use 'a'..'z' for generators and the
corresponding upper-case letter for inverses.
"""

from fractions import Fraction
from math import gcd

from .budgets import cap
from .errors import BudgetExceededError, SpecMismatchError

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _reduce(word):
    out = []
    for letter in word:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def _mul_words(u, v):
    if not u:
        return v
    if not v:
        return u
    u = list(u)
    for letter in v:
        if u and u[-1] == -letter:
            u.pop()
        else:
            u.append(letter)
    return tuple(u)


def _inv_word(u):
    return tuple(-letter for letter in reversed(u))


def parse_word(text, rank):
    """Parse 'abA' style strings into reduced word tuples."""
    word = []
    for ch in text:
        low = ch.lower()
        idx = _LETTERS.find(low)
        if idx < 0 or idx >= rank:
            raise ValueError(f"letter {ch!r} is not a generator (rank {rank})")
        word.append(-(idx + 1) if ch.isupper() else idx + 1)
    return _reduce(word)


def word_to_str(word):
    out = []
    for letter in word:
        ch = _LETTERS[abs(letter) - 1]
        out.append(ch.upper() if letter < 0 else ch)
    return "".join(out)


class GroupSpec:
    """Base class; subclasses implement the normal-form operations."""

    kind = None

    # -- operations on element data -------------------------------------
    def identity(self):
        raise NotImplementedError

    def multiply(self, x, y):
        raise NotImplementedError

    def invert(self, x):
        raise NotImplementedError

    def generator_count(self):
        raise NotImplementedError

    def generator(self, i):
        """Data of the i-th (0-based) generator."""
        raise NotImplementedError

    def phi_of(self, values, x):
        """Pairing of an integer character vector with element x."""
        raise NotImplementedError

    def sort_key(self, x):
        """Deterministic total order on normal forms (not shortlex)."""
        raise NotImplementedError

    def letters(self, x):
        """Some spelling of x as signed 1-based generator indices."""
        raise NotImplementedError

    def data_to_json(self, x):
        raise NotImplementedError

    def data_from_json(self, obj):
        raise NotImplementedError

    # -- shared helpers ---------------------------------------------------
    def generators(self):
        return [self.generator(i) for i in range(self.generator_count())]

    def check_same(self, other):
        if self != other:
            raise SpecMismatchError(f"mismatched group specs: {self} vs {other}")

    def __eq__(self, other):
        return isinstance(other, GroupSpec) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return str(self.to_json())


class FreeGroup(GroupSpec):
    kind = "FreeGroup"

    def __init__(self, rank):
        if not (isinstance(rank, int) and 1 <= rank <= 26):
            raise ValueError("FreeGroup rank must be an integer in 1..26")
        self.rank = rank

    def _key(self):
        return ("FreeGroup", self.rank)

    def identity(self):
        return ()

    def multiply(self, x, y):
        return _mul_words(x, y)

    def invert(self, x):
        return _inv_word(x)

    def generator_count(self):
        return self.rank

    def generator(self, i):
        return (i + 1,)

    def phi_of(self, values, x):
        return sum(values[abs(l) - 1] * (1 if l > 0 else -1) for l in x)

    def sort_key(self, x):
        return (len(x), tuple(2 * (abs(l) - 1) + (l < 0) for l in x))

    def letters(self, x):
        return tuple(x)

    def data_to_json(self, x):
        return word_to_str(x)

    def data_from_json(self, obj):
        return parse_word(obj, self.rank)

    def to_json(self):
        return {"kind": "FreeGroup", "rank": self.rank}


class FreeAbelian(GroupSpec):
    kind = "FreeAbelian"

    def __init__(self, rank):
        if not (isinstance(rank, int) and rank >= 1):
            raise ValueError("FreeAbelian rank must be a positive integer")
        self.rank = rank

    def _key(self):
        return ("FreeAbelian", self.rank)

    def identity(self):
        return (0,) * self.rank

    def multiply(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def invert(self, x):
        return tuple(-a for a in x)

    def generator_count(self):
        return self.rank

    def generator(self, i):
        return tuple(1 if j == i else 0 for j in range(self.rank))

    def phi_of(self, values, x):
        return sum(v * e for v, e in zip(values, x))

    def sort_key(self, x):
        return (sum(abs(e) for e in x), tuple((abs(e), e < 0) for e in x))

    def letters(self, x):
        out = []
        for i, e in enumerate(x):
            out.extend([(i + 1) if e > 0 else -(i + 1)] * abs(e))
        return tuple(out)

    def data_to_json(self, x):
        return list(x)

    def data_from_json(self, obj):
        if len(obj) != self.rank:
            raise ValueError("exponent vector has wrong length")
        return tuple(int(e) for e in obj)

    def to_json(self):
        return {"kind": "FreeAbelian", "rank": self.rank}


class DirectProduct(GroupSpec):
    kind = "DirectProduct"

    def __init__(self, factors):
        factors = tuple(factors)
        if len(factors) < 2:
            raise ValueError("DirectProduct needs at least 2 factors")
        if self._depth(factors) > 4:
            raise ValueError("DirectProduct nesting depth exceeds 4")
        self.factors = factors
        self._offsets = []
        total = 0
        for f in factors:
            self._offsets.append(total)
            total += f.generator_count()
        self._ngens = total

    @staticmethod
    def _depth(factors):
        d = 1
        for f in factors:
            if isinstance(f, DirectProduct):
                d = max(d, 1 + DirectProduct._depth(f.factors))
        return d

    def _key(self):
        return ("DirectProduct", tuple(f._key() for f in self.factors))

    def identity(self):
        return tuple(f.identity() for f in self.factors)

    def multiply(self, x, y):
        return tuple(f.multiply(a, b) for f, a, b in zip(self.factors, x, y))

    def invert(self, x):
        return tuple(f.invert(a) for f, a in zip(self.factors, x))

    def generator_count(self):
        return self._ngens

    def generator(self, i):
        parts = []
        for f, off in zip(self.factors, self._offsets):
            n = f.generator_count()
            if off <= i < off + n:
                parts.append(f.generator(i - off))
            else:
                parts.append(f.identity())
        return tuple(parts)

    def phi_of(self, values, x):
        total = 0
        for f, off, a in zip(self.factors, self._offsets, x):
            total += f.phi_of(values[off:off + f.generator_count()], a)
        return total

    def sort_key(self, x):
        return tuple(f.sort_key(a) for f, a in zip(self.factors, x))

    def letters(self, x):
        out = []
        for f, off, a in zip(self.factors, self._offsets, x):
            for l in f.letters(a):
                out.append(l + off if l > 0 else l - off)
        return tuple(out)

    def data_to_json(self, x):
        return [f.data_to_json(a) for f, a in zip(self.factors, x)]

    def data_from_json(self, obj):
        return tuple(f.data_from_json(o) for f, o in zip(self.factors, obj))

    def to_json(self):
        return {"kind": "DirectProduct", "factors": [f.to_json() for f in self.factors]}


class FreeByZ(GroupSpec):
    """Free-by-cyclic group F_r >| Z with t acting by the automorphism alpha."""

    kind = "FreeByZ"

    def __init__(self, fiber_rank, automorphism):
        if not (isinstance(fiber_rank, int) and 1 <= fiber_rank <= 26):
            raise ValueError("FreeByZ fiberRank must be an integer in 1..26")
        self.fiber_rank = fiber_rank
        images = []
        for img in automorphism:
            images.append(parse_word(img, fiber_rank) if isinstance(img, str) else _reduce(tuple(img)))
        if len(images) != fiber_rank:
            raise ValueError("need one automorphism image per fiber generator")
        self.images = tuple(images)
        det = _abelianized_det(self.images, fiber_rank)
        if det not in (1, -1):
            raise ValueError(f"automorphism is not bijective on abelianization (det {det})")
        self._alpha_cache = {0: tuple((i + 1,) for i in range(fiber_rank)), 1: self.images}
        self._inverse_images = None  # computed lazily; needs a word search

    def _key(self):
        return ("FreeByZ", self.fiber_rank, self.images)

    # -- the fiber automorphism ------------------------------------------
    def _apply_images(self, images, word):
        out = ()
        for letter in word:
            img = images[abs(letter) - 1]
            out = _mul_words(out, img if letter > 0 else _inv_word(img))
        return out

    def _inverse(self):
        if self._inverse_images is not None:
            return self._inverse_images
        # breadth-first search for preimages of every generator under alpha
        want = {(i + 1,): None for i in range(self.fiber_rank)}
        found = {}
        seen = {(): ()}
        frontier = [()]
        bound = cap("AUT_INVERSE_LENGTH")
        for _ in range(bound):
            new = []
            for w in frontier:
                for g in range(1, self.fiber_rank + 1):
                    for letter in (g, -g):
                        if w and w[-1] == -letter:
                            continue
                        u = w + (letter,)
                        if u in seen:
                            continue
                        seen[u] = u
                        img = self._apply_images(self.images, u)
                        if img in want and img not in found:
                            found[img] = u
                        new.append(u)
            if len(found) == len(want):
                break
            frontier = new
        if len(found) != len(want):
            raise ValueError(
                "automorphism inverse not found within length "
                f"{bound}; images {self.images} may not define an automorphism")
        self._inverse_images = tuple(found[(i + 1,)] for i in range(self.fiber_rank))
        return self._inverse_images

    def alpha_power(self, n, word):
        """alpha^n applied to a fiber word (n may be negative)."""
        if n == 0 or not word:
            return _reduce(word)
        images = self._alpha_cache.get(n)
        if images is None:
            if n > 0:
                prev = self.alpha_power_images(n - 1)
                images = tuple(self._apply_images(self.images, w) for w in prev)
            else:
                prev = self.alpha_power_images(n + 1)
                inv = self._inverse()
                images = tuple(self._apply_images(inv, w) for w in prev)
            self._alpha_cache[n] = images
        return self._apply_images(images, word)

    def alpha_power_images(self, n):
        if n not in self._alpha_cache:
            self.alpha_power(n, (1,))
        return self._alpha_cache[n]

    # -- group operations ---------------------------------------------------
    def identity(self):
        return ((), 0)

    def multiply(self, x, y):
        (w1, n1), (w2, n2) = x, y
        return (_mul_words(w1, self.alpha_power(n1, w2)), n1 + n2)

    def invert(self, x):
        w, n = x
        return (self.alpha_power(-n, _inv_word(w)), -n)

    def generator_count(self):
        return self.fiber_rank + 1

    def generator(self, i):
        if i < self.fiber_rank:
            return ((i + 1,), 0)
        return ((), 1)

    def phi_of(self, values, x):
        w, n = x
        total = values[self.fiber_rank] * n
        for letter in w:
            total += values[abs(letter) - 1] * (1 if letter > 0 else -1)
        return total

    def sort_key(self, x):
        w, n = x
        return (len(w) + abs(n), tuple(2 * (abs(l) - 1) + (l < 0) for l in w), abs(n), n < 0)

    def letters(self, x):
        w, n = x
        tl = self.fiber_rank + 1
        return tuple(w) + ((tl,) if n > 0 else (-tl,)) * abs(n)

    def data_to_json(self, x):
        return {"fiber": word_to_str(x[0]), "t": x[1]}

    def data_from_json(self, obj):
        return (parse_word(obj["fiber"], self.fiber_rank), int(obj["t"]))

    def to_json(self):
        return {"kind": "FreeByZ", "fiberRank": self.fiber_rank,
                "automorphism": [word_to_str(w) for w in self.images]}


def _abelianized_det(images, rank):
    mat = [[0] * rank for _ in range(rank)]
    for j, img in enumerate(images):
        for letter in img:
            mat[abs(letter) - 1][j] += 1 if letter > 0 else -1
    # integer determinant by fraction-free expansion (rank <= 26, desk scale)
    m = [row[:] for row in mat]
    n = rank
    det = 1
    for k in range(n):
        piv = None
        for i in range(k, n):
            if m[i][k] != 0:
                piv = i
                break
        if piv is None:
            return 0
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            det = -det
        for i in range(k + 1, n):
            f = Fraction(m[i][k], m[k][k])
            for j in range(k, n):
                m[i][j] = m[i][j] - f * m[k][j]
    for k in range(n):
        det *= m[k][k]
    return int(det)


def spec_from_json(obj) -> GroupSpec:
    kind = obj["kind"]
    if kind == "FreeGroup":
        return FreeGroup(obj["rank"])
    if kind == "FreeAbelian":
        return FreeAbelian(obj["rank"])
    if kind == "DirectProduct":
        return DirectProduct([spec_from_json(f) for f in obj["factors"]])
    if kind == "FreeByZ":
        return FreeByZ(obj["fiberRank"], obj["automorphism"])
    raise ValueError(f"unknown group kind {kind!r}")


class Character:
    """A nonzero homomorphism to the rationals, stored integralized.

    Rational generator values are rescaled to coprime integers (the lcm of
    denominators times the values, divided by their gcd), so phi takes
    integer values on the group and positive rescalings collapse to one
    stored form.
    """

    def __init__(self, spec: GroupSpec, values):
        vals = [Fraction(v) for v in values]
        if len(vals) != spec.generator_count():
            raise ValueError("character needs one value per generator")
        if all(v == 0 for v in vals):
            raise ValueError("character must be nonzero")
        lcm = 1
        for v in vals:
            lcm = lcm * v.denominator // gcd(lcm, v.denominator)
        ints = [int(v * lcm) for v in vals]
        g = 0
        for v in ints:
            g = gcd(g, abs(v))
        self.values = tuple(v // g for v in ints)
        self.spec = spec
        self._validate()

    def _validate(self):
        spec = self.spec
        if isinstance(spec, FreeByZ):
            # fiber values must be invariant under the abelianized automorphism
            fib = self.values[:spec.fiber_rank]
            for j, img in enumerate(spec.images):
                total = 0
                for letter in img:
                    total += fib[abs(letter) - 1] * (1 if letter > 0 else -1)
                if total != fib[j]:
                    raise ValueError(
                        "character is not well-defined: fiber values are not "
                        "invariant under the automorphism")
        if isinstance(spec, DirectProduct):
            for f, off in zip(spec.factors, spec._offsets):
                if isinstance(f, FreeByZ):
                    sub = self.values[off:off + f.generator_count()]
                    if any(sub):
                        Character._validate_sub(f, sub)

    @staticmethod
    def _validate_sub(spec, values):
        fib = values[:spec.fiber_rank]
        for j, img in enumerate(spec.images):
            total = sum(fib[abs(l) - 1] * (1 if l > 0 else -1) for l in img)
            if total != fib[j]:
                raise ValueError("character not invariant on a FreeByZ factor")

    def __call__(self, x):
        return self.spec.phi_of(self.values, x)

    def _key(self):
        return (self.spec._key(), self.values)

    def __eq__(self, other):
        return isinstance(other, Character) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Character{self.values}"

    def to_json(self):
        return {"values": [str(v) for v in self.values]}

    @staticmethod
    def from_json(spec, obj):
        return Character(spec, [Fraction(v) for v in obj["values"]])


def phi_value(character: Character, x) -> int:
    return character(x)


def multiply(spec: GroupSpec, x, y):
    return spec.multiply(x, y)


def enumerate_support(spec: GroupSpec, character: Character, length_bound: int,
                      window) -> list:
    """All elements of word length <= length_bound with phi in [lo, hi].

    Word length is the genuine word metric for the standard generators;
    breadth-first search over the Cayley graph discovers each element at its
    true distance, and processing letters in rank order makes the first
    discovering word the shortlex-least geodesic.  The result is sorted by
    that shortlex key; deterministic and duplicate-free.
    """
    lo, hi = window
    if lo > hi:
        raise ValueError("window lower bound exceeds upper bound")
    if length_bound < 0:
        raise ValueError("length bound must be >= 0")
    if length_bound > cap("MAX_WORD_LENGTH"):
        raise BudgetExceededError(
            f"word length bound {length_bound} exceeds cap {cap('MAX_WORD_LENGTH')}",
            length_bound=length_bound)
    character.spec.check_same(spec)
    support_cap = cap("SUPPORT_CAP")

    letters = []
    for i in range(spec.generator_count()):
        g = spec.generator(i)
        letters.append(g)
        letters.append(spec.invert(g))

    ident = spec.identity()
    seen = {ident: ()}
    order = [(ident, ())]
    frontier = [(ident, ())]
    for _ in range(length_bound):
        new = []
        for x, wx in sorted(frontier, key=lambda p: p[1]):
            for li, g in enumerate(letters):
                y = spec.multiply(x, g)
                if y in seen:
                    continue
                wy = wx + (li,)
                seen[y] = wy
                new.append((y, wy))
                order.append((y, wy))
                if len(seen) > support_cap:
                    raise BudgetExceededError(
                        f"support enumeration exceeded cap {support_cap}",
                        size=len(seen))
        frontier = new

    out = [(wx, x) for x, wx in order if lo <= character(x) <= hi]
    out.sort(key=lambda p: (len(p[0]), p[0]))
    return [x for _, x in out]


def ball_with_lengths(spec: GroupSpec, length_bound: int) -> dict:
    """Map element -> word-metric length for the ball of the given radius."""
    letters = []
    for i in range(spec.generator_count()):
        g = spec.generator(i)
        letters.append(g)
        letters.append(spec.invert(g))
    support_cap = cap("SUPPORT_CAP")
    ident = spec.identity()
    seen = {ident: 0}
    frontier = [ident]
    for dist in range(1, length_bound + 1):
        new = []
        for x in frontier:
            for g in letters:
                y = spec.multiply(x, g)
                if y not in seen:
                    seen[y] = dist
                    new.append(y)
                    if len(seen) > support_cap:
                        raise BudgetExceededError(
                            f"ball enumeration exceeded cap {support_cap}",
                            size=len(seen))
        frontier = new
    return seen
