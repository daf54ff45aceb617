"""L2-Betti numbers at desk scale.

Two routes: the exact top-degree |chi| rule for the recognized group
classes (free groups, products of free groups, and free-by-cyclic, whose
classifying complexes the package builds), and numerical estimates through
finite quotients, replacing each group element by the regular permutation
matrix of its image and taking exact rational ranks.  Only the rule-based
numbers are theorem-backed; quotient outputs are labeled estimates.
"""

from fractions import Fraction

from .complexes import ChainComplex, euler_characteristic
from .errors import InvalidQuotientError, UnsupportedSpecError
from .groups import DirectProduct, FreeAbelian, FreeByZ, FreeGroup, GroupSpec
from .linalg import SparseEliminator


class L2Report:
    def __init__(self, method, betti, sigma_empty_from=None, quotient_orders=None,
                 per_quotient=None, notes=None):
        self.method = method                  # "euler-rule" | "quotient-sequence"
        self.betti = betti                    # dim -> Fraction (rule) or list per quotient
        self.sigma_empty_from = sigma_empty_from
        self.quotient_orders = quotient_orders or []
        self.per_quotient = per_quotient or []
        self.notes = notes or []

    def to_json(self):
        out = {"method": self.method, "notes": self.notes}
        if self.method == "euler-rule":
            out["betti"] = [str(b) for b in self.betti]
            out["sigma_empty_from"] = self.sigma_empty_from
        else:
            out["quotient_orders"] = self.quotient_orders
            out["estimates"] = [[str(b) for b in row] for row in self.per_quotient]
        return out


def _free_factors(spec):
    if isinstance(spec, FreeGroup):
        return [spec]
    if isinstance(spec, DirectProduct):
        factors = []
        for f in spec.factors:
            sub = _free_factors(f)
            if sub is None:
                return None
            factors.extend(sub)
        return factors
    return None


def betti_by_euler_rule(spec: GroupSpec, C: ChainComplex) -> L2Report:
    """b_n = |chi| at the filtration length n, zero elsewhere.

    Recognized classes: free groups (length 1), direct products of free
    groups (length = number of factors), free-by-cyclic (length 2, where
    chi = 0 and every number vanishes).  Anything else is refused rather
    than guessed.
    """
    chi = euler_characteristic(C)
    top = C.top
    if isinstance(spec, FreeByZ):
        if chi != 0:
            raise UnsupportedSpecError(
                "free-by-cyclic presentation complex should have chi = 0")
        betti = [Fraction(0)] * (top + 1)
        return L2Report("euler-rule", betti, sigma_empty_from=None,
                        notes=["mapping-torus vanishing: all b_p = 0"])
    factors = _free_factors(spec)
    if factors is None:
        raise UnsupportedSpecError(
            f"no euler-rule for group class {spec!r}")
    if chi == 0:
        raise UnsupportedSpecError(
            "euler rule needs chi != 0; a rank-1 free factor makes chi = 0")
    n = len(factors)
    betti = [Fraction(0)] * (top + 1)
    betti[n] = Fraction(abs(chi))
    return L2Report("euler-rule", betti, sigma_empty_from=n,
                    notes=[f"b_{n} = |chi| = {abs(chi)}",
                           f"membership invariants are empty from degree {n} on"])


class FiniteQuotient:
    """Generator images in a finite permutation group.

    The images generate a finite group Q; specialization sends a group
    element to the |Q| x |Q| permutation matrix of its image acting on Q by
    left multiplication.
    """

    def __init__(self, spec: GroupSpec, images, order_cap=4096):
        self.spec = spec
        self.images = [tuple(p) for p in images]
        if len(self.images) != spec.generator_count():
            raise InvalidQuotientError("need one image per generator")
        deg = len(self.images[0]) if self.images else 1
        for p in self.images:
            if sorted(p) != list(range(deg)):
                raise InvalidQuotientError("images must be permutations of 0..deg-1")
        self._check_homomorphism()
        self.elements, self.index = self._closure(order_cap)
        self.order = len(self.elements)

    # -- permutation helpers -------------------------------------------------
    @staticmethod
    def _compose(p, q):
        """p after q."""
        return tuple(p[q[i]] for i in range(len(p)))

    @staticmethod
    def _inverse(p):
        out = [0] * len(p)
        for i, v in enumerate(p):
            out[v] = i
        return tuple(out)

    def _identity(self):
        deg = len(self.images[0]) if self.images else 1
        return tuple(range(deg))

    def _check_homomorphism(self):
        spec = self.spec
        if isinstance(spec, FreeGroup):
            return
        if isinstance(spec, FreeAbelian):
            for i in range(len(self.images)):
                for j in range(i + 1, len(self.images)):
                    a, b = self.images[i], self.images[j]
                    if self._compose(a, b) != self._compose(b, a):
                        raise InvalidQuotientError(
                            f"images of generators {i},{j} do not commute")
            return
        if isinstance(spec, FreeByZ):
            r = spec.fiber_rank
            t = self.images[r]
            tinv = self._inverse(t)
            for i in range(r):
                lhs = self._compose(self._compose(t, self.images[i]), tinv)
                rhs = self._apply_word(spec.images[i])
                if lhs != rhs:
                    raise InvalidQuotientError(
                        f"relator t a_{i} t^-1 = alpha(a_{i}) fails")
            return
        if isinstance(spec, DirectProduct):
            for i in range(len(self.images)):
                for j in range(i + 1, len(self.images)):
                    if self._factor_of(i) != self._factor_of(j):
                        a, b = self.images[i], self.images[j]
                        if self._compose(a, b) != self._compose(b, a):
                            raise InvalidQuotientError(
                                "images of generators of distinct factors "
                                "must commute")
            for f, off in zip(self.spec.factors, self.spec._offsets):
                sub = FiniteQuotient.__new__(FiniteQuotient)
                sub.spec = f
                sub.images = self.images[off:off + f.generator_count()]
                sub._check_homomorphism()
            return
        raise UnsupportedSpecError(f"no quotient support for {spec!r}")

    def _factor_of(self, i):
        for fi, (f, off) in enumerate(zip(self.spec.factors, self.spec._offsets)):
            if off <= i < off + f.generator_count():
                return fi
        raise IndexError(i)

    def _apply_word(self, letters):
        out = self._identity()
        for l in letters:
            img = self.images[abs(l) - 1]
            out = self._compose(out, img if l > 0 else self._inverse(img))
        return out

    def _closure(self, order_cap):
        ident = self._identity()
        elements = [ident]
        index = {ident: 0}
        frontier = [ident]
        gens = []
        for p in self.images:
            gens.append(p)
            gens.append(self._inverse(p))
        while frontier:
            new = []
            for x in frontier:
                for g in gens:
                    y = self._compose(x, g)
                    if y not in index:
                        index[y] = len(elements)
                        elements.append(y)
                        new.append(y)
                        if len(elements) > order_cap:
                            raise InvalidQuotientError(
                                f"quotient order exceeds cap {order_cap}")
            frontier = new
        return elements, index

    # -- applying the quotient ------------------------------------------------
    def apply(self, data):
        """Image permutation of a group element."""
        spec = self.spec
        if isinstance(spec, FreeGroup):
            return self._apply_word(data)
        if isinstance(spec, FreeAbelian):
            out = self._identity()
            for i, e in enumerate(data):
                img = self.images[i] if e > 0 else self._inverse(self.images[i])
                for _ in range(abs(e)):
                    out = self._compose(out, img)
            return out
        if isinstance(spec, FreeByZ):
            w, nexp = data
            out = self._apply_word(w)
            timg = self.images[spec.fiber_rank]
            step = timg if nexp > 0 else self._inverse(timg)
            for _ in range(abs(nexp)):
                out = self._compose(out, step)
            return out
        if isinstance(spec, DirectProduct):
            out = self._identity()
            for f, off, part in zip(spec.factors, spec._offsets, data):
                sub = FiniteQuotient.__new__(FiniteQuotient)
                sub.spec = f
                sub.images = self.images[off:off + f.generator_count()]
                out = self._compose(out, sub.apply(part))
            return out
        raise UnsupportedSpecError(f"no quotient support for {spec!r}")

    def to_json(self):
        return {"images": [list(p) for p in self.images], "order": self.order}

    @staticmethod
    def from_json(spec, obj):
        return FiniteQuotient(spec, obj["images"])


def _specialized_rank(C: ChainComplex, quotient: FiniteQuotient, i: int) -> int:
    """Exact rank of boundary i with group elements replaced by regular
    permutation matrices of their quotient images."""
    D = C.boundary(i)
    if D is None or not D:
        return 0
    Q = quotient
    n = Q.order
    elim = SparseEliminator()
    # block (r, c) of the specialized matrix is the regular permutation
    # matrix of the image of the (r, c) entry, summed over its terms
    rows = [dict() for _ in range(C.rank(i) * n)]
    for r in range(C.rank(i)):
        for c in range(C.rank(i - 1)):
            entry = D[r][c]
            for g, coef in entry.terms.items():
                perm = Q.apply(g)
                # left multiplication by perm on Q: basis q_j -> perm*q_j
                for j, qj in enumerate(Q.elements):
                    tgt = Q.index[Q._compose(perm, qj)]
                    row = rows[r * n + j]
                    key = c * n + tgt
                    row[key] = row.get(key, 0) + coef
    for row in rows:
        if row:
            elim.add_row(row)
    elim.run()
    return elim.rank


def betti_by_quotients(C: ChainComplex, quotients) -> L2Report:
    """Normalized Betti numbers b_p(Q)/|Q| per quotient, exact rationals."""
    per_quotient = []
    orders = []
    for Q in quotients:
        if Q.spec != C.spec:
            raise InvalidQuotientError("quotient is over a different group")
        n = Q.order
        orders.append(n)
        ranks = [_specialized_rank(C, Q, i) for i in range(C.top + 2)]
        row = []
        for p in range(C.top + 1):
            rank_dp = ranks[p] if p >= 1 else 0
            rank_dp1 = ranks[p + 1] if p + 1 <= C.top else 0
            bp = C.rank(p) * n - rank_dp - rank_dp1
            row.append(Fraction(bp, n))
        per_quotient.append(row)
    return L2Report("quotient-sequence", None, quotient_orders=orders,
                    per_quotient=per_quotient,
                    notes=["estimates: normalized Betti numbers of finite "
                           "quotients, exact per quotient"])
