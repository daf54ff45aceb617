"""Truncated chain contractions: search, verification, rebuilding, witnesses.

A contraction certificate in degree k is a family of group-ring matrices
H_i: C_i -> C_{i+1} (i = 0..k) such that, writing D_i for the boundaries,

    D_i * H_{i-1} + H_i * D_{i+1} = I - P_i        for every i <= k,

where every entry of every P_i has support with strictly positive character
value.  Over the Novikov ring each I - P_i is invertible by geometric
series, so a verified certificate proves the homology of C tensored with
the Novikov ring vanishes in degrees <= k; by Sikorav's criterion that is
membership of the character ray in the degree-k invariant.

The search is a single exact sparse linear solve; a returned certificate is
always re-verified by an independent arithmetic pass before release.
"""

from fractions import Fraction

from .complexes import ChainComplex, identity_matrix, mat_sub, matmul
from .errors import (InconclusiveError, InternalVerificationError,
                     PositivityError, WrongComplexError)
from .budgets import cap
from .gring import GroupRingElement
from .groups import Character, enumerate_support
from .errors import BudgetExceededError
from .jsonio import canonical_hash
from .linalg import RHS, SparseEliminator
from .novikov import (NovikovExpr, NovikovMatrix, certified_min_degree_at_least,
                      expr_from_dag, expr_to_dag, invert_I_minus_P,
                      matrix_truncation_equals, truncate)


def complex_hash(C: ChainComplex) -> str:
    return canonical_hash(C.to_json())


class ContractionCertificate:
    def __init__(self, complex_hash_, character, degree, maps, radius, metadata):
        self.complex_hash = complex_hash_
        self.character = character
        self.degree = degree
        self.maps = maps            # maps[i]: rank(i) x rank(i+1) over the group ring
        self.radius = radius        # max positive degree seen in any residual, plus one
        self.metadata = metadata

    def to_json(self):
        return {
            "complex_hash": self.complex_hash,
            "character": self.character.to_json(),
            "degree": self.degree,
            "maps": [[[e.to_json() for e in row] for row in H] for H in self.maps],
            "radius": self.radius,
            "metadata": self.metadata,
        }

    @staticmethod
    def from_json(spec, obj):
        chi = Character.from_json(spec, obj["character"])
        maps = [[[GroupRingElement.from_json(spec, e) for e in row] for row in H]
                for H in obj["maps"]]
        return ContractionCertificate(obj["complex_hash"], chi, obj["degree"],
                                      maps, obj["radius"], obj.get("metadata", {}))


class SearchOutcome:
    def __init__(self, certificate=None, bounds=None):
        self.certificate = certificate
        self.bounds = bounds

    @property
    def found(self):
        return self.certificate is not None


def _map_shapes(C: ChainComplex, k: int):
    return [(C.rank(i), C.rank(i + 1)) for i in range(k + 1)]


def _residuals(C: ChainComplex, chi: Character, maps, k: int):
    """P_i = I - D_i H_{i-1} - H_i D_{i+1} for i = 0..k, exact."""
    out = []
    for i in range(k + 1):
        n = C.rank(i)
        total = identity_matrix(n, C.spec)
        if i >= 1 and C.rank(i - 1) > 0 and maps[i - 1]:
            total = mat_sub(total, matmul(C.boundary(i), maps[i - 1]))
        if C.rank(i + 1) > 0 and maps[i]:
            total = mat_sub(total, matmul(maps[i], C.boundary(i + 1)))
        out.append(total)
    return out


def search_contraction(C: ChainComplex, chi: Character, k: int, L: int,
                       W=None) -> SearchOutcome:
    """Solve for a degree-k certificate with entries supported on the
    word-length <= L, character-window [-W, 0] ansatz.  Returns the verified
    certificate or the exhausted bounds."""
    chi.spec.check_same(C.spec)
    if k > C.top:
        raise ValueError(f"degree {k} exceeds the top degree {C.top}")
    if W is None:
        W = L
    # Truncated Novikov contractions ascend in phi, so the ansatz window is
    # symmetric: reach W below zero and W above (the truncation radius).
    support = enumerate_support(C.spec, chi, L, (-W, W))
    bounds = {"L": L, "window": [-W, W], "support": len(support)}

    shapes = _map_shapes(C, k)
    var_of = {}
    for i, (rows, cols) in enumerate(shapes):
        for r in range(rows):
            for c in range(cols):
                for s, w in enumerate(support):
                    var_of[(i, r, c, s)] = len(var_of)

    spec = C.spec
    mul = spec.multiply
    rows_by_key = {}

    def contribute(key, var, coef):
        row = rows_by_key.get(key)
        if row is None:
            row = {}
            rows_by_key[key] = row
        row[var] = row.get(var, 0) + coef

    # identity targets: equation value must equal the I coefficient
    for i in range(k + 1):
        n = C.rank(i)
        for r in range(n):
            key = (i, r, r, spec.identity())
            rows_by_key.setdefault(key, {})[RHS] = Fraction(1)

    for i in range(k + 1):
        n = C.rank(i)
        # D_i * H_{i-1}: contribution of H_{i-1}[s][c] at word m*w
        if i >= 1 and shapes[i - 1][1] > 0:
            D = C.boundary(i)
            for r in range(n):
                for s in range(C.rank(i - 1)):
                    entry = D[r][s]
                    for m, coef in entry.terms.items():
                        for c in range(n):
                            for si, w in enumerate(support):
                                g = mul(m, w)
                                if chi(g) <= 0:
                                    contribute((i, r, c, g),
                                               var_of[(i - 1, s, c, si)], coef)
        # H_i * D_{i+1}: contribution of H_i[r][s] at word w*m
        if shapes[i][1] > 0:
            D = C.boundary(i + 1)
            for s in range(C.rank(i + 1)):
                for c in range(n):
                    entry = D[s][c]
                    for m, coef in entry.terms.items():
                        for r in range(n):
                            for si, w in enumerate(support):
                                g = mul(w, m)
                                if chi(g) <= 0:
                                    contribute((i, r, c, g),
                                               var_of[(i, r, s, si)], coef)

    elim = SparseEliminator()
    key_order = sorted(rows_by_key,
                       key=lambda t: (t[0], t[1], t[2], spec.sort_key(t[3])))
    for key in key_order:
        elim.add_row(rows_by_key[key])
    elim.run()
    sol = elim.solution()
    if sol is None:
        return SearchOutcome(bounds=bounds)

    maps = []
    for i, (rows, cols) in enumerate(shapes):
        H = []
        for r in range(rows):
            row = []
            for c in range(cols):
                terms = {}
                for s, w in enumerate(support):
                    v = sol.get(var_of[(i, r, c, s)])
                    if v:
                        terms[w] = v
                row.append(GroupRingElement(spec, terms))
            H.append(row)
        maps.append(H)

    residuals = _residuals(C, chi, maps, k)
    radius = 1
    for P in residuals:
        for row in P:
            for e in row:
                if e.terms:
                    radius = max(radius, int(e.max_degree(chi)) + 1)
    cert = ContractionCertificate(complex_hash(C), chi, k, maps, radius,
                                  {"L": L, "window": [-W, W]})
    verdict = verify_certificate(cert, C)
    if not verdict.accepted:
        raise InternalVerificationError(
            f"search produced a certificate that failed verification: {verdict.reason}")
    return SearchOutcome(certificate=cert)


class Verdict:
    def __init__(self, accepted, reason=None, located=None):
        self.accepted = accepted
        self.reason = reason
        self.located = located

    def __bool__(self):
        return self.accepted

    def __repr__(self):
        return "accept" if self.accepted else f"reject({self.reason})"


def verify_certificate(cert: ContractionCertificate, C: ChainComplex) -> Verdict:
    """Recompute every defining identity with exact arithmetic."""
    if cert.complex_hash != complex_hash(C):
        raise WrongComplexError("certificate references a different complex")
    chi = cert.character
    if chi.spec != C.spec:
        return Verdict(False, "character over the wrong group")
    k = cert.degree
    if k > C.top or len(cert.maps) != k + 1:
        return Verdict(False, "map family has the wrong length")
    for i, H in enumerate(cert.maps):
        rows, cols = C.rank(i), C.rank(i + 1)
        if len(H) != rows or any(len(r) != cols for r in H):
            return Verdict(False, f"map {i} has the wrong shape")
        for row in H:
            for e in row:
                if e.spec != C.spec:
                    return Verdict(False, f"map {i} entry over the wrong group")
    residuals = _residuals(C, chi, cert.maps, k)
    for i, P in enumerate(residuals):
        for r, row in enumerate(P):
            for c, e in enumerate(row):
                for g in sorted(e.terms, key=C.spec.sort_key):
                    if chi(g) <= 0:
                        return Verdict(
                            False,
                            f"residual at degree {i}, entry ({r},{c}) has "
                            f"non-positive support",
                            located=(i, (r, c), g))
    return Verdict(True)


# --------------------------------------------------------------------------
# from relaxed certificates to exact Novikov contractions


def novikov_contraction_from_certificate(cert: ContractionCertificate,
                                         C: ChainComplex):
    """Exact chain contraction over the Novikov ring, as expression matrices.

    Degree by degree, with Q_i = I - D_i * H'_{i-1} (Q_0 = I):

        H'_i = Q_i * (I - P_i)^{-1} * H_i.

    Then H'_i * D_{i+1} = Q_i exactly: expanding (I - P_i)^{-1} as a
    geometric series, each term Q_i P_i^j D_{i+1}-contribution collapses
    because P_i D_i = D_i (I - H_{i-1} D_i) and Q_i D_i = 0, which follows
    from exactness one degree down.  All three identities are re-checked by
    truncation; failure aborts.
    """
    chi = cert.character
    k = cert.degree
    residuals = _residuals(C, chi, cert.maps, k)
    out = []
    prev = None  # H'_{i-1}
    check_radius = 2 * cert.radius + 2
    for i in range(k + 1):
        n = C.rank(i)
        ident = NovikovMatrix.identity(n, chi)
        if i == 0 or prev is None:
            Q = ident
        else:
            D = NovikovMatrix.from_gring(C.boundary(i), chi)
            Q = ident - (D * prev)
        inv = invert_I_minus_P(NovikovMatrix.from_gring(residuals[i], chi),
                               verify_radius=check_radius)
        if C.rank(i + 1) > 0:
            H = NovikovMatrix.from_gring(cert.maps[i], chi)
            Hp = (Q * inv) * H
        else:
            Hp = NovikovMatrix(n, 0, [[] for _ in range(n)], chi)
        out.append(Hp)
        prev = Hp
    _check_novikov_contraction(C, chi, out, k, check_radius)
    return out


def _check_novikov_contraction(C, chi, homotopies, k, radius):
    for i in range(k + 1):
        n = C.rank(i)
        total = NovikovMatrix.identity(n, chi)
        if i >= 1 and C.rank(i - 1) > 0:
            D = NovikovMatrix.from_gring(C.boundary(i), chi)
            total = total - (D * homotopies[i - 1])
        if C.rank(i + 1) > 0:
            D = NovikovMatrix.from_gring(C.boundary(i + 1), chi)
            total = total - (homotopies[i] * D)
        zero = [[GroupRingElement.zero(C.spec)] * n for _ in range(n)]
        if not matrix_truncation_equals(total, zero, radius):
            raise InternalVerificationError(
                f"exact Novikov contraction failed its truncation check at "
                f"degree {i}, radius {radius}")


# --------------------------------------------------------------------------
# rebuilding over the division closure


def rebuild_contraction(D_next, D_here, H_prev, H_here: NovikovMatrix, r: int,
                        retry_cap=None) -> NovikovMatrix:
    """Replace a Novikov homotopy by one over the division closure.

    D_next is the boundary out of degree n+1 (an (n+1)-rank x n-rank
    group-ring matrix), D_here the boundary out of degree n, H_prev the
    already-rebuilt homotopy one degree down (expression matrix or None),
    and H_here the degree-n homotopy over the Novikov ring.  Requires
    D_here*H_prev + H_here*D_next = I at truncation radius r.  Truncates
    H_here at a radius, forms P = (H_here - trunc) * D_next, certifies P
    strictly positive (doubling the radius on failure), and returns
    (I - P)^{-1} * trunc with the identity re-verified at twice the radius.
    """
    chi = H_here.character
    n = H_here.rows
    spec = chi.spec
    if retry_cap is None:
        retry_cap = cap("RETRY_CAP")

    def identity_defect(Hn, radius):
        total = NovikovMatrix.identity(n, chi)
        if H_prev is not None and D_here is not None and len(D_here):
            total = total - (NovikovMatrix.from_gring(D_here, chi) * H_prev)
        if Hn is not None and Hn.cols > 0 and len(D_next):
            total = total - (Hn * NovikovMatrix.from_gring(D_next, chi))
        zero = [[GroupRingElement.zero(spec)] * n for _ in range(n)]
        return matrix_truncation_equals(total, zero, radius)

    if not identity_defect(H_here, r):
        raise InternalVerificationError(
            f"rebuild precondition: homotopy identity fails at radius {r}")

    if H_here.cols == 0:
        return H_here

    Dn = NovikovMatrix.from_gring(D_next, chi)
    rho = max(r, 1)
    for _ in range(retry_cap + 1):
        trunc_entries = H_here.truncate(rho)
        Hbar = NovikovMatrix.from_gring(trunc_entries, chi)
        diff = H_here - Hbar
        P = diff * Dn
        ok = all(P.entries[i][j].is_structural_zero()
                 or certified_min_degree_at_least(P.entries[i][j], 1)
                 for i in range(n) for j in range(n))
        if ok:
            inv = invert_I_minus_P(P, verify_radius=2 * rho)
            rebuilt = inv * Hbar
            if not identity_defect(rebuilt, 2 * rho):
                raise InternalVerificationError(
                    f"rebuilt homotopy fails the identity at radius {2 * rho}")
            return rebuilt
        rho *= 2
    raise InconclusiveError("positivity of the rebuild deficit not certified",
                            last_radius=rho)


def rebuild_all(C: ChainComplex, chi: Character, homotopies, r: int):
    """Induct rebuild_contraction from degree 0 upward."""
    out = []
    prev = None
    for i, H in enumerate(homotopies):
        D_here = C.boundary(i) if i >= 1 else None
        D_next = C.boundary(i + 1) if C.rank(i + 1) > 0 else []
        try:
            if C.rank(i + 1) > 0:
                rebuilt = rebuild_contraction(D_next, D_here, prev, H, r)
            else:
                rebuilt = rebuild_contraction([], D_here, prev, H, r)
            out.append(rebuilt)
            prev = rebuilt
        except (InconclusiveError, InternalVerificationError) as err:
            err.degree = i
            raise
    return out


def division_closure_leaves_ok(matrix: NovikovMatrix) -> bool:
    """Every leaf of every entry is a group-ring embed node."""
    seen = set()

    def walk(x):
        if id(x) in seen:
            return True
        seen.add(id(x))
        if x.kind == "embed":
            return isinstance(x.payload, GroupRingElement)
        return all(walk(a) for a in x.args)

    return all(walk(e) for row in matrix.entries for e in row)


# --------------------------------------------------------------------------
# kernel witnesses


class KernelWitnessReport:
    def __init__(self, complex_hash_, character, degree, d_max, dims, verdict,
                 extinguished_at=None, bounds=None):
        self.complex_hash = complex_hash_
        self.character = character
        self.degree = degree
        self.d_max = d_max
        self.dims = dims
        self.verdict = verdict          # persistent | extinguished | budget-exhausted
        self.extinguished_at = extinguished_at
        self.bounds = bounds or {}

    def to_json(self):
        out = {
            "complex_hash": self.complex_hash,
            "character": self.character.to_json(),
            "degree": self.degree,
            "depth": self.d_max,
            "dimensions": self.dims,
            "verdict": self.verdict,
            "bounds": self.bounds,
        }
        if self.extinguished_at is not None:
            out["extinguished_at"] = self.extinguished_at
        return out


class _BallContext:
    """Word ball of a complex's group with integer element ids.

    Built once per (complex, L) and shared across characters and depths:
    the breadth-first tree gives every element's phi-value by one addition
    along its discovery edge, and right-multiplication by each boundary
    term becomes an id-to-id lookup table.  Products that leave the ball
    get extension ids whose phi is base phi plus the term's phi.
    """

    def __init__(self, spec, L):
        self.spec = spec
        self.L = L
        letters = []
        for i in range(spec.generator_count()):
            g = spec.generator(i)
            letters.append((g, i + 1))
            letters.append((spec.invert(g), -(i + 1)))
        support_cap = cap("SUPPORT_CAP")
        ident = spec.identity()
        self.elements = [ident]
        self.index = {ident: 0}
        self.prov = [(-1, 0)]      # (parent id, signed letter); root sentinel
        frontier = [0]
        for _ in range(L):
            new = []
            for xid in frontier:
                x = self.elements[xid]
                for g, letter in letters:
                    y = spec.multiply(x, g)
                    if y not in self.index:
                        self.index[y] = len(self.elements)
                        self.elements.append(y)
                        self.prov.append((xid, letter))
                        new.append(self.index[y])
                        if len(self.elements) > support_cap:
                            raise BudgetExceededError(
                                "ball enumeration exceeded support cap",
                                size=len(self.elements))
            frontier = new
        self.ball_count = len(self.elements)
        self.ext_prov = []          # (base id, term key) for extension ids
        self.tables = {}            # term data -> list of product ids
        self.term_data = []

    def table_for(self, m):
        tab = self.tables.get(m)
        if tab is not None:
            return tab
        spec = self.spec
        term_key = len(self.term_data)
        self.term_data.append(m)
        tab = []
        for wid in range(self.ball_count):
            p = spec.multiply(self.elements[wid], m)
            pid = self.index.get(p)
            if pid is None:
                pid = len(self.elements)
                self.index[p] = pid
                self.elements.append(p)
                self.ext_prov.append((wid, term_key))
                self.prov.append(None)
            tab.append(pid)
        self.tables[m] = tab
        return tab

    def phi_values(self, chi):
        vals = [0] * len(self.elements)
        gv = chi.values
        for i in range(1, self.ball_count):
            parent, letter = self.prov[i]
            step = gv[letter - 1] if letter > 0 else -gv[-letter - 1]
            vals[i] = vals[parent] + step
        term_phi = [chi(m) for m in self.term_data]
        for j, (base, term_key) in enumerate(self.ext_prov):
            vals[self.ball_count + j] = vals[base] + term_phi[term_key]
        return vals


_BALL_CACHE = {}


def _ball_context(C: ChainComplex, L: int, terms) -> _BallContext:
    key = (complex_hash(C), L)
    ctx = _BALL_CACHE.get(key)
    if ctx is None:
        if len(_BALL_CACHE) >= 2:
            _BALL_CACHE.clear()
        ctx = _BallContext(C.spec, L)
        _BALL_CACHE[key] = ctx
    for m in terms:
        ctx.table_for(m)
    return ctx


def _boundary_terms(C, i):
    """Flat (row, col, term data, coefficient) list of boundary i.

    Integer coefficients stay ints so the eliminator's integer fast path
    applies; a denominator only appears for user-supplied complexes, and
    then the whole row is rescaled on entry."""
    out = []
    D = C.boundary(i)
    if D is None:
        return out
    for r, row in enumerate(D):
        for c, e in enumerate(row):
            for m, coef in e.terms.items():
                if coef.denominator == 1:
                    coef = int(coef)
                out.append((r, c, m, coef))
    return out


def kernel_witness(C: ChainComplex, chi: Character, n: int, d_max: int,
                   L: int) -> KernelWitnessReport:
    """Depth-by-depth dimensions of truncated degree-n cycles modulo
    truncated boundaries; persistent when the space survives at d_max.

    At depth d the chains live on support {length <= L, 0 <= phi <= d};
    the cycle condition asks the boundary to vanish modulo phi > d, and the
    quotient is by boundaries of (n+1)-chains on the same support, cut the
    same way.  All dimensions are exact ranks over the rationals.
    """
    chi.spec.check_same(C.spec)
    if n > C.top:
        raise ValueError(f"degree {n} exceeds top degree {C.top}")
    if L > cap("MAX_WORD_LENGTH"):
        raise BudgetExceededError(
            f"word length bound {L} exceeds cap {cap('MAX_WORD_LENGTH')}",
            length_bound=L)
    dims = []
    bounds = {"L": L, "d_max": d_max}
    try:
        cycle_terms = _boundary_terms(C, n) if n >= 1 else []
        bdry_terms = _boundary_terms(C, n + 1) if C.rank(n + 1) > 0 else []
        ctx = _ball_context(C, L, [t[2] for t in cycle_terms + bdry_terms])
        phis = ctx.phi_values(chi)
        NB = len(ctx.elements)
        ball_ids = range(ctx.ball_count)
        # boundary letters with negative phi leak one cut level down when a
        # Novikov cycle is truncated; widen the support by that drop so the
        # truncated cycles stay visible (residual stays strictly above d)
        slack = 0
        for _, _, m, _ in cycle_terms:
            slack = max(slack, -chi(m))
        bounds = {"L": L, "d_max": d_max, "slack": slack}

        for d in range(d_max + 1):
            support = [i for i in ball_ids if 0 <= phis[i] <= d + slack]
            rank_n = C.rank(n)
            nx = rank_n * len(support)

            cycle = {}
            for r, c, m, coef in cycle_terms:
                tab = ctx.tables[m]
                base = r * NB
                for wid in support:
                    pid = tab[wid]
                    if phis[pid] <= d:
                        key = c * NB + pid
                        row = cycle.get(key)
                        if row is None:
                            row = cycle[key] = {}
                        v = base + wid
                        row[v] = row.get(v, 0) + coef

            def run_rows(rowdicts):
                elim = SparseEliminator()
                for key in sorted(rowdicts):
                    elim.add_row(rowdicts[key])
                elim.run()
                return elim.rank

            dim_X = nx - run_rows(cycle)

            dim_XB = 0
            if bdry_terms and dim_X > 0:
                # boundary subspace: x agrees with the phi <= d part of
                # y*D_{n+1}; every x position needs a matching row
                ny = C.rank(n + 1) * len(support)
                yoff = rank_n * NB
                boff = C.rank(n - 1) if n >= 1 else 0
                joint = {k: dict(v) for k, v in cycle.items()}
                for c in range(rank_n):
                    for wid in support:
                        joint[(boff + c) * NB + wid] = {c * NB + wid: -1}
                ycut = {}
                for r, c, m, coef in bdry_terms:
                    tab = ctx.tables[m]
                    for wid in support:
                        pid = tab[wid]
                        if phis[pid] <= d + slack:
                            key = (boff + c) * NB + pid
                            row = joint.get(key)
                            if row is None:
                                row = joint[key] = {}
                            v = yoff + r * NB + wid
                            row[v] = row.get(v, 0) + coef
                            yrow = ycut.get(key)
                            if yrow is None:
                                yrow = ycut[key] = {}
                            yrow[v] = yrow.get(v, 0) + coef
                dim_joint = (nx + ny) - run_rows(joint)
                dim_y0 = ny - run_rows(ycut)
                dim_XB = dim_joint - dim_y0
            dims.append(dim_X - dim_XB)
    except BudgetExceededError as err:
        return KernelWitnessReport(complex_hash(C), chi, n, d_max, dims,
                                   "budget-exhausted", bounds={**bounds,
                                                               "error": str(err)})
    verdict = "persistent" if dims and dims[-1] >= 1 else "extinguished"
    ext_at = None
    if verdict == "extinguished":
        ext_at = d_max
        while ext_at > 0 and dims[ext_at - 1] == 0:
            ext_at -= 1
    return KernelWitnessReport(complex_hash(C), chi, n, d_max, dims, verdict,
                               extinguished_at=ext_at, bounds=bounds)


def certificate_to_json(cert: ContractionCertificate):
    return cert.to_json()


def certificate_from_json(spec, obj):
    return ContractionCertificate.from_json(spec, obj)
