"""Lazily evaluated elements of the division closure inside the Novikov ring.

A NovikovExpr is an expression DAG over group-ring leaves, closed under sum,
product, negation, and geometric inversion GeomInv(u) = (1-u)^{-1}, which is
constructible only when the support of u is certified strictly positive for
the attached character.  Every consumer works through truncations: exact
finite group-ring shadows {phi <= r} of the denoted element.  Truncations
are memoized per (node, radius) behind a per-node lock, and are bit-identical
with caching disabled.
"""

import threading
from fractions import Fraction

from .budgets import cap
from .errors import (InconclusiveError, InternalVerificationError,
                     InvalidInverseError, PositivityError, SpecMismatchError)
from .gring import GroupRingElement, INF
from .groups import Character

EMBED, SUM, PRODUCT, NEGATE, GEOMINV = "embed", "sum", "product", "negate", "geominv"


class NovikovExpr:
    __slots__ = ("kind", "character", "payload", "args", "_memo", "_lock",
                 "_mdb", "_probe0")

    def __init__(self, kind, character, payload=None, args=()):
        self.kind = kind
        self.character = character
        self.payload = payload
        self.args = args
        self._memo = {}
        self._lock = threading.Lock()
        self._mdb = None
        self._probe0 = None

    # -- constructors --------------------------------------------------------
    @staticmethod
    def embed(element: GroupRingElement, character: Character):
        character.spec.check_same(element.spec)
        return NovikovExpr(EMBED, character, payload=element)

    @staticmethod
    def zero(character):
        return NovikovExpr.embed(GroupRingElement.zero(character.spec), character)

    @staticmethod
    def one(character):
        return NovikovExpr.embed(GroupRingElement.one(character.spec), character)

    def _check(self, other):
        if self.character != other.character:
            raise SpecMismatchError("Novikov expressions carry different characters")

    def __add__(self, other):
        self._check(other)
        return NovikovExpr(SUM, self.character, args=(self, other))

    def __mul__(self, other):
        self._check(other)
        return NovikovExpr(PRODUCT, self.character, args=(self, other))

    def __neg__(self):
        return NovikovExpr(NEGATE, self.character, args=(self,))

    def __sub__(self, other):
        return self + (-other)

    @staticmethod
    def geom_inv(u: "NovikovExpr"):
        """(1-u)^{-1} = sum of u^k; requires support of u strictly positive."""
        if not certified_min_degree_at_least(u, 1):
            raise PositivityError(
                "GeomInv requires certified min degree >= 1; "
                f"structural bound {min_degree_bound(u)} and positivity probe failed")
        return NovikovExpr(GEOMINV, u.character, args=(u,))

    def is_structural_zero(self):
        return self.kind == EMBED and self.payload.is_zero()

    # -- io --------------------------------------------------------------------
    def __repr__(self):
        return f"NovikovExpr<{self.kind}>"


def min_degree_bound(x: NovikovExpr):
    """Sound structural lower bound for min phi over the support."""
    if x._mdb is not None:
        return x._mdb
    if x.kind == EMBED:
        v = x.payload.min_degree(x.character)
    elif x.kind == SUM:
        v = min(min_degree_bound(a) for a in x.args)
    elif x.kind == PRODUCT:
        v = sum(min_degree_bound(a) for a in x.args)
        if any(min_degree_bound(a) == INF for a in x.args):
            v = INF
    elif x.kind == NEGATE:
        v = min_degree_bound(x.args[0])
    elif x.kind == GEOMINV:
        v = 0
    else:
        raise ValueError(x.kind)
    x._mdb = v
    return v


def certified_min_degree_at_least(x: NovikovExpr, k: int) -> bool:
    """True iff the denoted element provably has no support at phi < k.

    The structural bound is tried first; failing that, the truncation at
    k-1 is computed, and emptiness of that exact shadow is a proof.
    """
    if min_degree_bound(x) >= k:
        return True
    if k == 1 and x._probe0 is not None:
        return x._probe0
    ok = truncate(x, k - 1).is_zero()
    if k == 1:
        x._probe0 = ok
    return ok


def truncate(x: NovikovExpr, r: int, use_memo: bool = True) -> GroupRingElement:
    """Exact truncation {phi <= r} of the denoted Novikov element."""
    if use_memo:
        with x._lock:
            hit = x._memo.get(r)
        if hit is not None:
            return hit
    chi = x.character
    spec = chi.spec
    if x.kind == EMBED:
        out = x.payload.truncate(chi, r)
    elif x.kind == SUM:
        out = truncate(x.args[0], r, use_memo) + truncate(x.args[1], r, use_memo)
    elif x.kind == NEGATE:
        out = -truncate(x.args[0], r, use_memo)
    elif x.kind == PRODUCT:
        a, b = x.args
        ra = r - min_degree_bound(b)
        rb = r - min_degree_bound(a)
        if ra == -INF or rb == -INF or ra == INF or rb == INF:
            out = GroupRingElement.zero(spec)
        else:
            ta = truncate(a, ra, use_memo)
            tb = truncate(b, rb, use_memo)
            out = _truncated_product(ta, tb, chi, r)
    elif x.kind == GEOMINV:
        u = x.args[0]
        d = max(1, min_degree_bound(u)) if min_degree_bound(u) != INF else None
        out = GroupRingElement.zero(spec)
        if r >= 0:
            if d is None:  # u denotes 0, series is just 1
                out = GroupRingElement.one(spec)
            else:
                ur = truncate(u, r, use_memo)
                acc = GroupRingElement.one(spec)
                term = GroupRingElement.one(spec)
                for _ in range(r // d):
                    term = _truncated_product(term, ur, chi, r)
                    if term.is_zero():
                        break
                    acc = acc + term
                out = acc
    else:
        raise ValueError(x.kind)
    if len(out.terms) > cap("TERM_CAP"):
        from .errors import BudgetExceededError
        raise BudgetExceededError("truncation support exceeded term cap",
                                  size=len(out.terms))
    if use_memo:
        with x._lock:
            x._memo[r] = out
    return out


def _truncated_product(a: GroupRingElement, b: GroupRingElement, chi, r):
    mul = a.spec.multiply
    phi = chi
    out = {}
    for g, c in a.terms.items():
        pg = phi(g)
        for h, d in b.terms.items():
            if pg + phi(h) > r:
                continue
            k = mul(g, h)
            s = out.get(k, 0) + c * d
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return GroupRingElement(a.spec, out)


# --------------------------------------------------------------------------
# matrices over Novikov expressions


class NovikovMatrix:
    __slots__ = ("rows", "cols", "entries", "character")

    def __init__(self, rows, cols, entries, character):
        self.rows = rows
        self.cols = cols
        self.entries = entries
        self.character = character

    @staticmethod
    def from_entries(entries, character):
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        return NovikovMatrix(rows, cols, [list(r) for r in entries], character)

    @staticmethod
    def from_gring(matrix, character):
        """Lift a matrix of GroupRingElements to Embed leaves."""
        ent = [[NovikovExpr.embed(e, character) for e in row] for row in matrix]
        rows = len(matrix)
        cols = len(matrix[0]) if rows else 0
        return NovikovMatrix(rows, cols, ent, character)

    @staticmethod
    def identity(n, character):
        one = NovikovExpr.one(character)
        zero = NovikovExpr.zero(character)
        ent = [[one if i == j else zero for j in range(n)] for i in range(n)]
        return NovikovMatrix(n, n, ent, character)

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def __add__(self, other):
        ent = [[self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
               for i in range(self.rows)]
        return NovikovMatrix(self.rows, self.cols, ent, self.character)

    def __sub__(self, other):
        ent = [[self.entries[i][j] - other.entries[i][j] for j in range(self.cols)]
               for i in range(self.rows)]
        return NovikovMatrix(self.rows, self.cols, ent, self.character)

    def __mul__(self, other):
        if self.cols != other.rows:
            raise ValueError("matrix shapes do not compose")
        chi = self.character
        ent = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                terms = [self.entries[i][k] * other.entries[k][j]
                         for k in range(self.cols)
                         if not (self.entries[i][k].is_structural_zero()
                                 or other.entries[k][j].is_structural_zero())]
                if not terms:
                    row.append(NovikovExpr.zero(chi))
                else:
                    acc = terms[0]
                    for t in terms[1:]:
                        acc = acc + t
                    row.append(acc)
            ent.append(row)
        return NovikovMatrix(self.rows, other.cols, ent, chi)

    def truncate(self, r):
        return [[truncate(e, r) for e in row] for row in self.entries]

    def map(self, fn):
        return NovikovMatrix(self.rows, self.cols,
                             [[fn(e) for e in row] for row in self.entries],
                             self.character)


def matrix_truncation_equals(m: NovikovMatrix, target, r) -> bool:
    """Compare entrywise truncations at radius r against group-ring targets."""
    for i in range(m.rows):
        for j in range(m.cols):
            if truncate(m.entries[i][j], r) != target[i][j].truncate(m.character, r):
                return False
    return True


def gring_identity(n, spec):
    one = GroupRingElement.one(spec)
    zero = GroupRingElement.zero(spec)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def invert_I_minus_P(P: NovikovMatrix, verify_radius=None) -> NovikovMatrix:
    """Invert I - P over the division closure when P has strictly positive support.

    Walks the diagonal in increasing order: inverts each diagonal unit
    1 - P_kk by a geometric series, then clears the off-diagonal entries of
    that row and column with elementary operations, accumulating the row ops
    in L and the column ops in R so that the inverse is R*L.  The result is
    verified exactly by truncation before being returned.
    """
    if P.rows != P.cols:
        raise ValueError("matrix must be square")
    n = P.rows
    chi = P.character
    for i in range(n):
        for j in range(n):
            e = P.entries[i][j]
            if e.is_structural_zero():
                continue
            if not certified_min_degree_at_least(e, 1):
                raise PositivityError(
                    f"entry ({i},{j}) of P lacks certified strictly positive support")
    if verify_radius is None:
        verify_radius = _default_verify_radius(P)

    cur = [[None if P.entries[i][j].is_structural_zero() else P.entries[i][j]
            for j in range(n)] for i in range(n)]
    L = NovikovMatrix.identity(n, chi)
    R = NovikovMatrix.identity(n, chi)
    one = NovikovExpr.one(chi)

    for k in range(n):
        u = cur[k][k]
        g = NovikovExpr.geom_inv(u) if u is not None else one
        if u is not None:
            for j in range(n):
                if not L.entries[k][j].is_structural_zero():
                    L.entries[k][j] = g * L.entries[k][j]
        # clear column k with row operations: row_i += P_ik * (scaled row k)
        col = [(i, cur[i][k]) for i in range(n) if i != k and cur[i][k] is not None]
        for i, pik in col:
            for j in range(n):
                if not L.entries[k][j].is_structural_zero():
                    add = pik * L.entries[k][j]
                    L.entries[i][j] = add if L.entries[i][j].is_structural_zero() \
                        else L.entries[i][j] + add
        # clear row k with column operations: col_j += (g * P_kj) * col_k
        rowk = [(j, cur[k][j]) for j in range(n) if j != k and cur[k][j] is not None]
        for j, pkj in rowk:
            f = g * pkj
            for i in range(n):
                if not R.entries[i][k].is_structural_zero():
                    add = R.entries[i][k] * f
                    R.entries[i][j] = add if R.entries[i][j].is_structural_zero() \
                        else R.entries[i][j] + add
        # update the deficit matrix: P'_ij = P_ij + P_ik * g * P_kj
        for i, pik in col:
            left = pik * g
            for j, pkj in rowk:
                add = left * pkj
                cur[i][j] = add if cur[i][j] is None else cur[i][j] + add
        for j in range(n):
            cur[k][j] = None
        for i in range(n):
            cur[i][k] = None

    inv = R * L
    ident = NovikovMatrix.identity(n, chi)
    check = (ident - P) * inv
    if not matrix_truncation_equals(check, gring_identity(n, chi.spec), verify_radius):
        raise InternalVerificationError(
            "invert_I_minus_P failed its exact truncation check "
            f"at radius {verify_radius}")
    return inv


def _default_verify_radius(P: NovikovMatrix, probe=4):
    best = 0
    for row in P.entries:
        for e in row:
            if e.kind == EMBED:
                d = e.payload.max_degree(P.character)
                if d != -INF:
                    best = max(best, int(d))
            else:
                t = truncate(e, probe)
                d = t.max_degree(P.character)
                if d != -INF:
                    best = max(best, int(d))
    return 2 * best + 4


def invert_over_division_closure(A: NovikovMatrix, B: NovikovMatrix, r: int,
                                 retry_cap=None) -> NovikovMatrix:
    """Given a right inverse B of A over the Novikov ring, produce a two-sided
    inverse over the division closure by truncating B and inverting I - P.

    Retries with doubled truncation radius while the positivity of P cannot
    be certified; raises InconclusiveError when the retry cap is reached.
    """
    if A.rows != A.cols or B.rows != B.cols or A.rows != B.rows:
        raise ValueError("need square matrices of equal size")
    n = A.rows
    chi = A.character
    for i in range(n):
        for j in range(n):
            if not certified_min_degree_at_least(A.entries[i][j], -r) \
                    and not A.entries[i][j].is_structural_zero():
                raise InvalidInverseError(
                    f"entry ({i},{j}) of A has support below {-r}")
    prod = A * B
    if not matrix_truncation_equals(prod, gring_identity(n, chi.spec), r):
        raise InvalidInverseError(
            f"A*B does not truncate to the identity at radius {r}")
    if retry_cap is None:
        retry_cap = cap("RETRY_CAP")
    radius = r
    for _ in range(retry_cap + 1):
        Bbar = NovikovMatrix.from_gring(B.truncate(radius), chi)
        P = NovikovMatrix.identity(n, chi) - (A * Bbar)
        ok = all(
            P.entries[i][j].is_structural_zero()
            or certified_min_degree_at_least(P.entries[i][j], 1)
            for i in range(n) for j in range(n))
        if ok:
            inv = Bbar * invert_I_minus_P(P, verify_radius=2 * radius + 2)
            rv = 2 * radius + 2
            left = A * inv
            right = inv * A
            target = gring_identity(n, chi.spec)
            if not (matrix_truncation_equals(left, target, rv)
                    and matrix_truncation_equals(right, target, rv)):
                raise InternalVerificationError(
                    "two-sided inverse failed exact verification at radius "
                    f"{rv}")
            return inv
        radius *= 2
        if radius == 0:
            radius = 1
    raise InconclusiveError(
        "positivity of I - A*trunc(B) not certified within retry cap",
        last_radius=radius)


# --------------------------------------------------------------------------
# DAG serialization


def expr_to_dag(exprs):
    """Serialize expressions sharing one character into a node list."""
    nodes = []
    ids = {}

    def visit(x):
        key = id(x)
        if key in ids:
            return ids[key]
        if x.kind == EMBED:
            rec = {"op": "embed", "elem": x.payload.to_json()}
        else:
            rec = {"op": x.kind, "args": [visit(a) for a in x.args]}
        ids[key] = len(nodes)
        nodes.append(rec)
        return ids[key]

    roots = [visit(x) for x in exprs]
    return {"nodes": nodes, "roots": roots}


def expr_from_dag(dag, character):
    spec = character.spec
    built = []
    for rec in dag["nodes"]:
        if rec["op"] == "embed":
            built.append(NovikovExpr.embed(
                GroupRingElement.from_json(spec, rec["elem"]), character))
        elif rec["op"] == SUM:
            a, b = (built[i] for i in rec["args"])
            built.append(a + b)
        elif rec["op"] == PRODUCT:
            a, b = (built[i] for i in rec["args"])
            built.append(a * b)
        elif rec["op"] == NEGATE:
            built.append(-built[rec["args"][0]])
        elif rec["op"] == GEOMINV:
            built.append(NovikovExpr.geom_inv(built[rec["args"][0]]))
        else:
            raise ValueError(rec["op"])
    return [built[i] for i in dag["roots"]]
