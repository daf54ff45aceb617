"""Based free chain complexes over rational group rings.

Convention: chains in degree i are coefficient row vectors of length
ranks[i]; the boundary in degree i is an ranks[i] x ranks[i-1] matrix D_i of
group-ring entries, and "apply f then g" is the matrix product F*G (ring
multiplication in that order).  With this convention d(d(x)) = 0 reads
D_i * D_{i-1} = 0, and a degree-(+1) homotopy H_i: C_i -> C_{i+1} is an
ranks[i] x ranks[i+1] matrix.
"""

from fractions import Fraction

from .errors import UnsupportedSpecError
from .gring import GroupRingElement
from .groups import (DirectProduct, FreeAbelian, FreeByZ, FreeGroup,
                     GroupSpec, spec_from_json)


class ChainComplex:
    def __init__(self, spec: GroupSpec, ranks, boundaries, labels=None,
                 validate=True):
        self.spec = spec
        self.ranks = tuple(ranks)
        self.boundaries = boundaries  # boundaries[i] = D_{i+1}: C_{i+1} -> C_i
        self.labels = labels
        if validate:
            self.validate()

    @property
    def top(self):
        return len(self.ranks) - 1

    def rank(self, i):
        if 0 <= i < len(self.ranks):
            return self.ranks[i]
        return 0

    def boundary(self, i):
        """D_i: C_i -> C_{i-1} as a rank(i) x rank(i-1) matrix (or None)."""
        if 1 <= i <= self.top:
            return self.boundaries[i - 1]
        return None

    def validate(self):
        if len(self.boundaries) != max(0, len(self.ranks) - 1):
            raise ValueError("need one boundary matrix per positive degree")
        for i in range(1, self.top + 1):
            D = self.boundary(i)
            if len(D) != self.ranks[i]:
                raise ValueError(f"boundary {i} has wrong row count")
            for row in D:
                if len(row) != self.ranks[i - 1]:
                    raise ValueError(f"boundary {i} has wrong column count")
                for e in row:
                    if e.spec != self.spec:
                        raise ValueError("boundary entry over the wrong group")
        for i in range(2, self.top + 1):
            prod = matmul(self.boundary(i), self.boundary(i - 1))
            for r, row in enumerate(prod):
                for c, e in enumerate(row):
                    if not e.is_zero():
                        raise ValueError(
                            f"dd != 0: degree {i}, entry ({r},{c}) = {e!r}")

    def to_json(self):
        out = {
            "spec": self.spec.to_json(),
            "ranks": list(self.ranks),
            "boundaries": [[[e.to_json() for e in row] for row in D]
                           for D in self.boundaries],
        }
        if self.labels is not None:
            out["labels"] = self.labels
        return out

    @staticmethod
    def from_json(obj):
        spec = spec_from_json(obj["spec"])
        boundaries = [[[GroupRingElement.from_json(spec, e) for e in row]
                       for row in D] for D in obj["boundaries"]]
        return ChainComplex(spec, obj["ranks"], boundaries,
                            labels=obj.get("labels"))


def matmul(A, B):
    """Product of two group-ring matrices."""
    if not A or not B:
        return []
    n, k, m = len(A), len(B), len(B[0])
    spec = None
    for row in A:
        for e in row:
            spec = e.spec
            break
        if spec:
            break
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = GroupRingElement.zero(spec)
            for t in range(k):
                a = A[i][t]
                b = B[t][j]
                if a.terms and b.terms:
                    acc = acc + a * b
            row.append(acc)
        out.append(row)
    return out


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def identity_matrix(n, spec):
    one = GroupRingElement.one(spec)
    zero = GroupRingElement.zero(spec)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def augmentation(x: GroupRingElement) -> Fraction:
    return sum(x.terms.values(), Fraction(0))


def fox_derivative(spec: GroupSpec, letters, wrt: int) -> GroupRingElement:
    """Free differential of a word with respect to generator index wrt.

    letters: sequence of signed 1-based generator indices over spec's full
    generating set.  Uses d(uv) = du + u.dv, d(g)/dg = 1, d(g^-1)/dg = -g^-1.
    """
    out = {}
    prefix = spec.identity()

    def add(g, c):
        s = out.get(g, 0) + c
        if s:
            out[g] = s
        else:
            out.pop(g, None)

    for letter in letters:
        idx = abs(letter) - 1
        gen = spec.generator(idx)
        if letter > 0:
            if idx == wrt:
                add(prefix, Fraction(1))
            prefix = spec.multiply(prefix, gen)
        else:
            prefix = spec.multiply(prefix, spec.invert(gen))
            if idx == wrt:
                add(prefix, Fraction(-1))
    return GroupRingElement(spec, out)


def presentation_complex(spec: GroupSpec) -> ChainComplex:
    """Chain complex of the standard classifying space for the built-ins."""
    one_minus = lambda gdata: GroupRingElement(
        spec, {gdata: Fraction(1), spec.identity(): Fraction(-1)})

    if isinstance(spec, FreeGroup):
        D1 = [[one_minus(spec.generator(i))] for i in range(spec.rank)]
        return ChainComplex(spec, (1, spec.rank), [D1],
                            labels={"edges": [f"gen{i}" for i in range(spec.rank)]})

    if isinstance(spec, FreeAbelian) and spec.rank == 1:
        D1 = [[one_minus(spec.generator(0))]]
        return ChainComplex(spec, (1, 1), [D1])

    if isinstance(spec, FreeAbelian) and spec.rank == 2:
        D1 = [[one_minus(spec.generator(0))], [one_minus(spec.generator(1))]]
        relator = (1, 2, -1, -2)  # the commutator [a, b]
        D2 = [[fox_derivative(spec, relator, 0), fox_derivative(spec, relator, 1)]]
        return ChainComplex(spec, (1, 2, 1), [D1, D2])

    if isinstance(spec, FreeByZ):
        r = spec.fiber_rank
        D1 = [[one_minus(spec.generator(i))] for i in range(r + 1)]
        D2 = []
        t = r + 1
        for i in range(r):
            # relator  t a_i t^{-1} alpha(a_i)^{-1}
            word = [t, i + 1, -t] + [-l for l in reversed(spec.images[i])]
            D2.append([fox_derivative(spec, word, j) for j in range(r + 1)])
        return ChainComplex(spec, (1, r + 1, r), [D1, D2])

    raise UnsupportedSpecError(
        f"no built-in presentation complex for {spec!r}")


def _embed_factor(spec_prod: DirectProduct, which: int, x: GroupRingElement):
    """Push a factor group-ring element into the product group ring."""
    idents = [f.identity() for f in spec_prod.factors]
    out = {}
    for g, c in x.terms.items():
        key = tuple(g if i == which else idents[i]
                    for i in range(len(spec_prod.factors)))
        out[key] = c
    return GroupRingElement(spec_prod, out)


def product_complex(X: ChainComplex, Y: ChainComplex) -> ChainComplex:
    """Tensor product complex over the direct product of the two groups.

    (X ox Y)_n = sum over p+q=n of X_p ox Y_q with the Koszul sign
    d(x ox y) = dx ox y + (-1)^p x ox dy; basis ordered lexicographically by
    (p, X-index, Y-index).
    """
    spec = DirectProduct([X.spec, Y.spec])
    topX, topY = X.top, Y.top
    top = topX + topY

    def basis(n):
        out = []
        for p in range(n + 1):
            q = n - p
            if p <= topX and q <= topY:
                for i in range(X.rank(p)):
                    for j in range(Y.rank(q)):
                        out.append((p, i, j))
        return out

    bases = [basis(n) for n in range(top + 1)]
    ranks = [len(b) for b in bases]
    zero = GroupRingElement.zero(spec)
    boundaries = []
    for n in range(1, top + 1):
        index = {b: k for k, b in enumerate(bases[n - 1])}
        D = [[zero] * ranks[n - 1] for _ in range(ranks[n])]
        for row, (p, i, j) in enumerate(bases[n]):
            q = n - p
            if p >= 1:
                DX = X.boundary(p)
                for i2 in range(X.rank(p - 1)):
                    e = DX[i][i2]
                    if e.terms:
                        col = index[(p - 1, i2, j)]
                        D[row][col] = D[row][col] + _embed_factor(spec, 0, e)
            if q >= 1:
                DY = Y.boundary(q)
                sign = -1 if p % 2 else 1
                for j2 in range(Y.rank(q - 1)):
                    e = DY[j][j2]
                    if e.terms:
                        col = index[(p, i, j2)]
                        add = _embed_factor(spec, 1, e)
                        D[row][col] = D[row][col] + (add.scale(sign))
        boundaries.append(D)
    return ChainComplex(spec, ranks, boundaries)


def euler_characteristic(C: ChainComplex) -> int:
    return sum((-1) ** i * r for i, r in enumerate(C.ranks))
