"""Twisted Laurent polynomials over finite group algebras, and the
approximate-Ore solver.

The base algebra is the rational group algebra of a finite group of order m,
realized through its left regular representation; the normalized trace of an
element is its identity coefficient, and the normalized kernel dimension of
x is dim_Q(ker L_x)/m, a rational in [0, 1].  Twisted polynomials carry
coefficients on the right of powers of t, with t z = tau(z) t, so

    (t^i x)(t^j y) = t^{i+j} tau^{-j}(x) y.

approx_ore finds, for nonzero q, q' and a rational 0 < eps <= 1, polynomials
r, r' with q r = q' r' exactly and

    nul r < nul q' + eps,      nul r' < nul q + nul q' + eps,

by scanning the kernels of the ladder maps lambda_k whose block entries are
the regular representations of tau^{-j}(q_{l-j}) and -tau^{-j}(q'_{l-j}).
Lying in ker lambda_k is exactly the equation q r = q' r' collected by
powers of t.  A generic integer combination of the kernel basis maximizes
the rank of the leading coefficient; the scan is guaranteed to trigger by
k = ceil((N+1)/eps) + N + 1, and exceeding that bound aborts as a bug.
"""

import random
from fractions import Fraction
from math import ceil

from .errors import InternalVerificationError, SpecMismatchError
from .linalg import IncrementalEchelon, rational_rank


class FiniteTracedAlgebra:
    """Rational group algebra of a finite group with a twisting automorphism.

    table[i][j] = index of g_i * g_j;  index 0 is the identity.
    tau is a permutation of element indices with tau(xy) = tau(x)tau(y).
    """

    def __init__(self, table, tau=None, name=None):
        self.table = [list(r) for r in table]
        self.order = len(table)
        self.name = name or f"order{self.order}"
        m = self.order
        for i in range(m):
            if self.table[0][i] != i or self.table[i][0] != i:
                raise ValueError("index 0 must be the identity")
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    if self.table[self.table[i][j]][k] != self.table[i][self.table[j][k]]:
                        raise ValueError("multiplication table is not associative")
        self.inv = [None] * m
        for i in range(m):
            for j in range(m):
                if self.table[i][j] == 0:
                    self.inv[i] = j
        if any(v is None for v in self.inv):
            raise ValueError("table has no inverses; not a group")
        self.tau = list(tau) if tau is not None else list(range(m))
        if sorted(self.tau) != list(range(m)):
            raise ValueError("tau must be a permutation of element indices")
        for i in range(m):
            for j in range(m):
                if self.tau[self.table[i][j]] != self.table[self.tau[i]][self.tau[j]]:
                    raise ValueError("tau does not respect multiplication")
        self._tau_pows = {0: list(range(m)), 1: self.tau}

    # -- named constructors ------------------------------------------------
    @staticmethod
    def trivial():
        return FiniteTracedAlgebra([[0]], name="trivial")

    @staticmethod
    def cyclic(n, tau="inversion"):
        table = [[(i + j) % n for j in range(n)] for i in range(n)]
        if tau == "inversion":
            perm = [(-i) % n for i in range(n)]
        elif tau == "identity":
            perm = list(range(n))
        else:
            perm = tau
        return FiniteTracedAlgebra(table, perm, name=f"cyclic{n}")

    @staticmethod
    def symmetric3(tau="conjugation"):
        perms = [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (2, 1, 0), (1, 0, 2)]
        index = {p: i for i, p in enumerate(perms)}

        def compose(p, q):  # p after q
            return tuple(p[q[i]] for i in range(3))

        table = [[index[compose(p, q)] for q in perms] for p in perms]
        if tau == "conjugation":
            s = (0, 2, 1)  # conjugate by the transposition swapping 1,2
            perm = [index[compose(compose(s, p), s)] for p in perms]
        elif tau == "identity":
            perm = list(range(6))
        else:
            perm = tau
        return FiniteTracedAlgebra(table, perm, name="s3")

    # -- element operations --------------------------------------------------
    def zero(self):
        return (Fraction(0),) * self.order

    def one(self):
        return tuple(Fraction(1 if i == 0 else 0) for i in range(self.order))

    def elem(self, coeffs):
        return tuple(Fraction(c) for c in coeffs)

    def add(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def mul(self, x, y):
        out = [Fraction(0)] * self.order
        for i, a in enumerate(x):
            if a:
                row = self.table[i]
                for j, b in enumerate(y):
                    if b:
                        out[row[j]] += a * b
        return tuple(out)

    def tau_power(self, n):
        if n not in self._tau_pows:
            m = self.order
            if n > 0:
                prev = self.tau_power(n - 1)
                self._tau_pows[n] = [self.tau[prev[i]] for i in range(m)]
            else:
                inv = [0] * m
                for i, v in enumerate(self.tau):
                    inv[v] = i
                prev = self.tau_power(n + 1)
                self._tau_pows[n] = [inv[prev[i]] for i in range(m)]
        return self._tau_pows[n]

    def twist(self, n, x):
        perm = self.tau_power(n)
        out = [Fraction(0)] * self.order
        for i, c in enumerate(x):
            if c:
                out[perm[i]] = c
        return tuple(out)

    def regular_matrix(self, x):
        """Left multiplication by x on the group basis."""
        m = self.order
        mat = [[Fraction(0)] * m for _ in range(m)]
        for h, c in enumerate(x):
            if c:
                for j in range(m):
                    mat[self.table[h][j]][j] += c
        return mat

    def trace(self, x):
        return Fraction(x[0])

    def kernel_dim(self, x):
        """Normalized kernel dimension of the regular action, in [0, 1]."""
        if all(c == 0 for c in x):
            return Fraction(1)
        return Fraction(self.order - rational_rank(self.regular_matrix(x)),
                        self.order)

    def rank(self, x):
        if all(c == 0 for c in x):
            return 0
        return rational_rank(self.regular_matrix(x))


class TwistedPoly:
    """Finite map power-of-t -> nonzero algebra element."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra, coeffs):
        self.algebra = algebra
        clean = {}
        for p, c in coeffs.items():
            c = algebra.elem(c)
            if any(v != 0 for v in c):
                clean[int(p)] = c
        self.coeffs = clean

    @staticmethod
    def zero(algebra):
        return TwistedPoly(algebra, {})

    @staticmethod
    def one(algebra):
        return TwistedPoly(algebra, {0: algebra.one()})

    @staticmethod
    def t_power(algebra, n, coeff=None):
        return TwistedPoly(algebra, {n: coeff if coeff is not None else algebra.one()})

    def is_zero(self):
        return not self.coeffs

    def _check(self, other):
        if self.algebra is not other.algebra:
            raise SpecMismatchError("twisted polynomials over different algebras")

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        alg = self.algebra
        for p, c in other.coeffs.items():
            s = alg.add(out.get(p, alg.zero()), c)
            if any(v != 0 for v in s):
                out[p] = s
            else:
                out.pop(p, None)
        return TwistedPoly(alg, out)

    def __neg__(self):
        alg = self.algebra
        return TwistedPoly(alg, {p: tuple(-v for v in c) for p, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._check(other)
        alg = self.algebra
        out = {}
        for i, xi in self.coeffs.items():
            for j, yj in other.coeffs.items():
                term = alg.mul(alg.twist(-j, xi), yj)
                p = i + j
                s = alg.add(out.get(p, alg.zero()), term)
                if any(v != 0 for v in s):
                    out[p] = s
                else:
                    out.pop(p, None)
        return TwistedPoly(alg, out)

    def __eq__(self, other):
        return self.algebra is other.algebra and self.coeffs == other.coeffs

    def shift(self, n):
        """Left multiplication by t^n: shifts powers, coefficients untouched."""
        return TwistedPoly(self.algebra, {p + n: c for p, c in self.coeffs.items()})

    def right_shift(self, n):
        """Right multiplication by t^n: shifts powers and twists coefficients."""
        return TwistedPoly(self.algebra,
                           {p + n: self.algebra.twist(-n, c)
                            for p, c in self.coeffs.items()})

    def init_term(self):
        """(pure part, associated power); (0, 0) for the zero polynomial."""
        if not self.coeffs:
            return (self.algebra.zero(), 0)
        p = min(self.coeffs)
        return (self.coeffs[p], p)

    def degree(self):
        return max(self.coeffs) if self.coeffs else 0

    def nullity(self):
        pure, _ = self.init_term()
        return self.algebra.kernel_dim(pure)

    def to_json(self):
        return {str(p): [str(v) for v in c]
                for p, c in sorted(self.coeffs.items())}

    @staticmethod
    def from_json(algebra, obj):
        return TwistedPoly(algebra,
                           {int(p): [Fraction(v) for v in c]
                            for p, c in obj.items()})

    def __repr__(self):
        return f"TwistedPoly({self.to_json()})"


def twisted_multiply(x: TwistedPoly, y: TwistedPoly) -> TwistedPoly:
    return x * y


def build_lambda_k(q: TwistedPoly, q2: TwistedPoly, k: int):
    """Rational matrix of lambda_k over the regular representation.

    Requires both init powers normalized to 0.  Rows are the t^l
    coefficients of q r - q' r' (l = 0..k+N-1), columns the coordinates of
    (x_0, y_0, ..., x_{k-1}, y_{k-1}).
    """
    if q.init_term()[1] != 0 or q2.init_term()[1] != 0:
        raise ValueError("init powers must be normalized to 0")
    alg = q.algebra
    m = alg.order
    N = max(q.degree(), q2.degree())
    rows = (k + N) * m
    cols = 2 * k * m
    mat = [[Fraction(0)] * cols for _ in range(rows)]
    for j in range(k):
        for which, poly, sign in ((0, q, 1), (1, q2, -1)):
            for i, ci in poly.coeffs.items():
                l = i + j
                blk = alg.regular_matrix(alg.twist(-j, ci))
                for rr in range(m):
                    row = mat[l * m + rr]
                    base = (2 * j + which) * m
                    for cc in range(m):
                        v = blk[rr][cc]
                        if v:
                            row[base + cc] += sign * v
    return mat


def lambda_kernel_data(q, q2, k):
    """Echelonize lambda_k with the x_0 block ordered last.

    Returns (d_k, dimW, kernel_basis, col_of) where d_k is the normalized
    kernel dimension, dimW the rational dimension of the projection of the
    kernel to the x_0 coordinate, and kernel vectors are dicts over column
    slots."""
    alg = q.algebra
    m = alg.order
    N = max(q.degree(), q2.degree())
    # column slots: x_j (j>=1) and all y_j first, x_0 block last
    slots = []
    for j in range(k):
        for which in (0, 1):
            if j == 0 and which == 0:
                continue
            slots.append((which, j))
    slots.append((0, 0))
    col_of = {}
    pos = 0
    for which, j in slots:
        for cc in range(m):
            col_of[(which, j, cc)] = pos
            pos += 1
    ncols = pos
    x0_start = ncols - m

    ech = IncrementalEchelon()
    ech.extend_columns(ncols)
    rank_rest_rows = []
    for l in range(k + N):
        for rr in range(m):
            rank_rest_rows.append({})
    for j in range(k):
        for which, poly, sign in ((0, q, 1), (1, q2, -1)):
            for i, ci in poly.coeffs.items():
                l = i + j
                blk = alg.regular_matrix(alg.twist(-j, ci))
                for rr in range(m):
                    row = rank_rest_rows[l * m + rr]
                    for cc in range(m):
                        v = blk[rr][cc]
                        if v:
                            key = col_of[(which, j, cc)]
                            row[key] = row.get(key, Fraction(0)) + sign * v
    for row in rank_rest_rows:
        if row:
            ech.add_row(row)
    rank_total = ech.rank
    piv_x0 = ech.rank_on_columns(lambda c: c >= x0_start)
    d_k = Fraction(2 * k * m - rank_total, m)
    dimW = m - piv_x0
    return d_k, dimW, ech, col_of, x0_start


def approx_ore(q: TwistedPoly, q2: TwistedPoly, eps, seed: int = 0):
    """Solve the approximate Ore condition for (q, q').

    Returns (r, r2, info) with q*r == q2*r2 exactly and the nullity bounds
    nul r < nul q' + eps, nul r' < nul q + nul q' + eps, both exact.
    """
    if q.is_zero() or q2.is_zero():
        raise ValueError("q and q' must be nonzero")
    eps = Fraction(eps)
    if not (0 < eps <= 1):
        raise ValueError("eps must satisfy 0 < eps <= 1")
    q._check(q2)
    alg = q.algebra
    m = alg.order

    a = q.init_term()[1]
    b = q2.init_term()[1]
    qn = q.right_shift(-a)
    q2n = q2.right_shift(-b)
    N = max(qn.degree(), q2n.degree())
    nul_q = q.nullity()
    nul_q2 = q2.nullity()
    k_bound = ceil(Fraction(N + 1) / eps) + N + 1
    rng = random.Random(seed)
    d_ledger = []

    for k in range(1, k_bound + 1):
        d_k, dimW, ech, col_of, x0_start = lambda_kernel_data(qn, q2n, k)
        d_ledger.append(d_k)
        if d_k < k - N:
            raise InternalVerificationError(
                f"kernel dimension d_{k} = {d_k} fell below k - N")
        dim_ker = 2 * k * m - ech.rank
        if dim_ker == 0:
            continue
        if Fraction(dimW, m) <= 1 - nul_q2 - eps:
            continue
        basis = ech.kernel_basis()
        vec = _select_kernel_vector(basis, alg, x0_start, dimW, rng)
        r, r2 = _vector_to_polys(vec, alg, col_of, k)
        R = r.shift(-a)
        R2 = r2.shift(-b)
        if not (q * R == q2 * R2):
            raise InternalVerificationError("kernel vector violates q r = q' r'")
        nul_r = R.nullity()
        nul_r2 = R2.nullity()
        if not (nul_r < nul_q2 + eps and nul_r2 < nul_q + nul_q2 + eps):
            raise InternalVerificationError(
                "selected kernel element violates the nullity bounds: "
                f"nul r = {nul_r}, nul r' = {nul_r2}")
        info = {"k": k, "d_ledger": d_ledger, "N": N, "k_bound": k_bound,
                "nul_q": nul_q, "nul_q2": nul_q2,
                "nul_r": nul_r, "nul_r2": nul_r2}
        return R, R2, info
    raise InternalVerificationError(
        f"approximate Ore scan exhausted k <= {k_bound}; this contradicts "
        "the termination bound and indicates a bug")


def _select_kernel_vector(basis, alg, x0_start, dimW, rng):
    m = alg.order
    if dimW == 0:
        return basis[0]
    spread = 3
    for attempt in range(256):
        coeffs = [rng.randint(-spread, spread) for _ in basis]
        vec = {}
        for c, bv in zip(coeffs, basis):
            if c:
                for col, v in bv.items():
                    nv = vec.get(col, Fraction(0)) + c * v
                    if nv:
                        vec[col] = nv
                    else:
                        vec.pop(col, None)
        x0 = [vec.get(x0_start + cc, Fraction(0)) for cc in range(m)]
        if alg.rank(tuple(x0)) == dimW:
            return vec
        if (attempt + 1) % 32 == 0:
            spread *= 2
    raise InternalVerificationError(
        "no generic combination attained the maximal leading rank")


def _vector_to_polys(vec, alg, col_of, k):
    m = alg.order
    rc, r2c = {}, {}
    for (which, j, cc), col in col_of.items():
        v = vec.get(col)
        if v:
            tgt = rc if which == 0 else r2c
            cur = tgt.setdefault(j, [Fraction(0)] * m)
            cur[cc] = v
    return (TwistedPoly(alg, rc), TwistedPoly(alg, r2c))


def common_multiple(qs, q2s, seed: int = 0):
    """Asymptotically injective common multiples with the schedule eps = 2^-n.

    For each index n returns (x_n, y_n, z_n) with x_n = q_n y_n = q'_n z_n,
    plus a ledger of nullities and their partial sums.
    """
    if len(qs) != len(q2s):
        raise ValueError("sequences must have equal length")
    xs, ys, zs = [], [], []
    ledger = []
    partial = Fraction(0)
    for n, (qn, q2n) in enumerate(zip(qs, q2s), start=1):
        eps = Fraction(1, 2 ** n)
        y, z, info = approx_ore(qn, q2n, eps, seed=seed + n)
        x = qn * y
        if not (x == q2n * z):
            raise InternalVerificationError("common multiple equality failed")
        xs.append(x)
        ys.append(y)
        zs.append(z)
        entry = {"n": n, "eps": eps, "nul_x": x.nullity(),
                 "nul_y": y.nullity(), "nul_z": z.nullity()}
        partial += entry["nul_x"]
        entry["partial_sum_nul_x"] = partial
        ledger.append(entry)
    return xs, ys, zs, ledger
