"""Exact linear algebra over the rationals.

Two engines:

  SparseEliminator -- fraction-free sparse Gaussian elimination with
      Markowitz-style pivoting (pivot row of minimal fill, pivot column of
      minimal occupancy, ties broken by (row, col) index).  Rows are dicts
      {column: int} after clearing denominators; the right-hand side rides
      along as the reserved column RHS, which is never chosen as a pivot.
      Used for the contraction searches and kernel witnesses, whose systems
      are huge but eliminate with almost no fill.

  IncrementalEchelon -- dense-ish row echelon over Fraction supporting
      appended rows and columns, with kernel-basis extraction.  Used for the
      lambda_k ladders, where each step extends the previous matrix.
"""

import heapq
from fractions import Fraction
from math import gcd

from .budgets import cap
from .errors import BudgetExceededError

RHS = -1  # reserved column key for the affine right-hand side
_BIG = 1 << 96


def _strip_content(row):
    g = 0
    for v in row.values():
        g = gcd(g, abs(v))
        if g == 1:
            return
    if g > 1:
        for k in row:
            row[k] //= g


def _clear_denominators(row):
    """dict col -> Fraction/int  =>  dict col -> int (times a positive unit)."""
    lcm = 1
    for v in row.values():
        if isinstance(v, Fraction):
            d = v.denominator
            lcm = lcm * d // gcd(lcm, d)
    out = {}
    for k, v in row.items():
        iv = int(v * lcm) if isinstance(v, Fraction) else v * lcm
        if iv:
            out[k] = iv
    return out


class SparseEliminator:
    """Forward elimination; keeps pivot rows for back-substitution."""

    def __init__(self):
        self.rows = {}
        self.col_rows = {}
        self._next = 0
        self.pivots = []          # (pivot col, row dict) in elimination order
        self.inconsistent = False
        self.ops = 0
        self._op_cap = cap("ELIM_ROW_CAP")

    def add_row(self, row):
        """row: dict {col: coefficient}, RHS key for the affine part."""
        for v in row.values():
            if type(v) is not int:
                r = _clear_denominators(row)
                break
        else:
            r = {k: v for k, v in row.items() if v}
        if not r:
            return
        if len(r) == 1 and RHS in r:
            self.inconsistent = True
            return
        i = self._next
        self._next += 1
        self.rows[i] = r
        for c in r:
            if c != RHS:
                self.col_rows.setdefault(c, set()).add(i)

    def run(self):
        rows, col_rows = self.rows, self.col_rows
        heap = [(len(r), i) for i, r in rows.items()]
        heapq.heapify(heap)
        while heap:
            nz, i = heapq.heappop(heap)
            r = rows.get(i)
            if r is None:
                continue
            if len(r) != nz:
                heapq.heappush(heap, (len(r), i))
                continue
            live = [c for c in r if c != RHS]
            if not live:
                if r.get(RHS):
                    self.inconsistent = True
                del rows[i]
                continue
            pc = min(live, key=lambda c: (len(col_rows[c]), c))
            pv = r[pc]
            del rows[i]
            self.pivots.append((pc, r))
            touched = col_rows.pop(pc)
            touched.discard(i)
            for c in live:
                if c != pc:
                    col_rows[c].discard(i)
            for j in touched:
                rj = rows[j]
                f = rj[pc]
                self.ops += len(r)
                if self.ops > self._op_cap:
                    raise BudgetExceededError(
                        f"elimination exceeded {self._op_cap} coefficient updates",
                        ops=self.ops)
                if pv != 1:
                    for c in rj:
                        rj[c] *= pv
                for c, v in r.items():
                    nv = rj.get(c, 0) - f * v
                    if nv:
                        if c not in rj and c != RHS and c != pc:
                            col_rows[c].add(j)
                        rj[c] = nv
                    elif c in rj:
                        del rj[c]
                        if c != RHS and c != pc:
                            col_rows[c].discard(j)
                rj.pop(pc, None)
                # unit pivots keep coefficients small; only strip otherwise
                if pv != 1 and pv != -1 or f > _BIG or -f > _BIG:
                    _strip_content(rj)
                if not rj or (len(rj) == 1 and RHS in rj):
                    if rj.get(RHS):
                        self.inconsistent = True
                    del rows[j]
                    for c in list(rj):
                        if c != RHS:
                            col_rows[c].discard(j)
                else:
                    heapq.heappush(heap, (len(rj), j))
        return self

    @property
    def rank(self):
        return len(self.pivots)

    def solution(self):
        """Particular solution with free variables set to zero, or None."""
        if self.inconsistent:
            return None
        sol = {}
        for pc, row in reversed(self.pivots):
            s = Fraction(row.get(RHS, 0))
            for c, v in row.items():
                if c != RHS and c != pc:
                    s -= v * sol.get(c, Fraction(0))
            x = s / row[pc]
            if x:
                sol[pc] = x
        return sol


def solve_sparse(rows):
    """rows: iterable of dicts with RHS entries.  Returns (solution|None, rank)."""
    elim = SparseEliminator()
    for r in rows:
        elim.add_row(r)
    elim.run()
    return elim.solution(), elim.rank


def kernel_dimension(rows, nvars):
    """Dimension of the solution space of a homogeneous system."""
    elim = SparseEliminator()
    for r in rows:
        r = dict(r)
        r.pop(RHS, None)
        elim.add_row(r)
    elim.run()
    return nvars - elim.rank


class IncrementalEchelon:
    """Row echelon over Fraction; rows and columns may be appended."""

    def __init__(self):
        self.rows = []      # list of dicts, kept sorted by pivot column
        self.pivcols = []
        self.ncols = 0

    def extend_columns(self, ncols):
        self.ncols = max(self.ncols, ncols)

    def add_row(self, row):
        """row: dict {col: Fraction}; reduces against current echelon."""
        r = {c: Fraction(v) for c, v in row.items() if v}
        for pc, er in zip(self.pivcols, self.rows):
            v = r.get(pc)
            if v:
                f = v / er[pc]
                for c, w in er.items():
                    nv = r.get(c, Fraction(0)) - f * w
                    if nv:
                        r[c] = nv
                    else:
                        r.pop(c, None)
        if not r:
            return False
        pc = min(r)
        import bisect
        pos = bisect.bisect_left(self.pivcols, pc)
        self.pivcols.insert(pos, pc)
        self.rows.insert(pos, r)
        return True

    @property
    def rank(self):
        return len(self.rows)

    def rank_on_columns(self, colpred):
        """Number of pivots on columns satisfying the predicate."""
        return sum(1 for c in self.pivcols if colpred(c))

    def kernel_basis(self):
        """Basis of the nullspace, one vector per free column (dicts)."""
        pivset = set(self.pivcols)
        free = [c for c in range(self.ncols) if c not in pivset]
        basis = []
        for fcol in free:
            vec = {fcol: Fraction(1)}
            for pc, row in zip(reversed(self.pivcols), reversed(self.rows)):
                s = Fraction(0)
                for c, v in row.items():
                    if c != pc:
                        s += v * vec.get(c, Fraction(0))
                if s:
                    vec[pc] = -s / row[pc]
            basis.append(vec)
        return basis


def rational_rank(matrix):
    """Exact rank of a dense matrix given as list of rows of Fractions/ints."""
    elim = SparseEliminator()
    for row in matrix:
        elim.add_row({j: v for j, v in enumerate(row) if v})
    elim.run()
    return elim.rank
