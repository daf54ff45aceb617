"""Campaign orchestration: predictions versus engine outcomes per character.

For each sampled character the engine runs a contraction search at the
campaign degree; failing that, kernel witnesses are scanned from the degree
downward.  Predictions come from the euler-rule Betti numbers when the
group class is recognized.  A verified certificate at a degree the
prediction declares empty is a fatal inconsistency: it would falsify the
obstruction theorem or reveal an arithmetic bug, so the campaign aborts.

Outcomes for a character and its negation are always computed separately;
membership invariants are not symmetric under the antipodal map and no
inference path between them exists here.
"""

import itertools
from concurrent.futures import ProcessPoolExecutor

from .complexes import ChainComplex
from .contraction import (ContractionCertificate, certificate_from_json,
                          complex_hash, kernel_witness, search_contraction,
                          verify_certificate)
from .errors import (BudgetExceededError, FatalInconsistencyError,
                     InvalidQuotientError, UnsupportedSpecError)
from .groups import Character, GroupSpec
from .gring import GroupRingElement
from .l2 import betti_by_euler_rule


def default_characters(spec: GroupSpec):
    """All sign patterns in {-1,0,1} per generator, nonzero and valid on the
    spec, deduplicated up to positive scaling by the integralized form."""
    n = spec.generator_count()
    seen = {}
    for values in itertools.product((-1, 0, 1), repeat=n):
        if all(v == 0 for v in values):
            continue
        try:
            chi = Character(spec, values)
        except ValueError:
            continue
        seen.setdefault(chi.values, chi)
    return [seen[k] for k in sorted(seen)]


class SigmaCampaign:
    def __init__(self, spec, complex_, characters, degree,
                 search_L=3, search_W=None, witness_d_max=6, witness_L=None,
                 witness_degrees=None):
        self.spec = spec
        self.complex = complex_
        self.characters = characters
        self.degree = degree
        self.search_L = search_L
        self.search_W = search_W if search_W is not None else search_L
        self.witness_d_max = witness_d_max
        self.witness_L = witness_L if witness_L is not None else witness_d_max + 2
        self.witness_degrees = (witness_degrees if witness_degrees is not None
                                else list(range(degree, -1, -1)))

    def params(self):
        return {
            "degree": self.degree,
            "search_L": self.search_L,
            "search_W": self.search_W,
            "witness_d_max": self.witness_d_max,
            "witness_L": self.witness_L,
            "witness_degrees": self.witness_degrees,
        }


def _run_one(args):
    (complex_json, values, degree, search_L, search_W,
     witness_d_max, witness_L, witness_degrees) = args
    C = ChainComplex.from_json(complex_json)
    chi = Character(C.spec, values)
    outcome = {"character": list(chi.values)}
    try:
        found = search_contraction(C, chi, degree, search_L, search_W)
    except BudgetExceededError as err:
        outcome["status"] = "budget-limited"
        outcome["error"] = str(err)
        return outcome
    if found.found:
        outcome["status"] = "certified-in-sigma"
        outcome["certificate"] = found.certificate.to_json()
        return outcome
    outcome["search_bounds"] = found.bounds
    witness_reports = []
    persistent_at = None
    for deg in witness_degrees:
        try:
            rep = kernel_witness(C, chi, deg, witness_d_max, witness_L)
        except BudgetExceededError as err:
            outcome["status"] = "budget-limited"
            outcome["error"] = str(err)
            outcome["witnesses"] = witness_reports
            return outcome
        witness_reports.append(rep.to_json())
        if rep.verdict == "persistent":
            persistent_at = deg
            break
        if rep.verdict == "budget-exhausted":
            outcome["status"] = "budget-limited"
            outcome["witnesses"] = witness_reports
            return outcome
    outcome["witnesses"] = witness_reports
    if persistent_at is not None:
        outcome["status"] = "witness-persistent"
        outcome["witness_degree"] = persistent_at
    else:
        outcome["status"] = "no-certificate"
    return outcome


def run_campaign(campaign: SigmaCampaign, threads=None):
    """Returns the machine-readable report; raises FatalInconsistencyError
    when a verified certificate contradicts the prediction."""
    C = campaign.complex
    chash = complex_hash(C)
    try:
        rule = betti_by_euler_rule(campaign.spec, C)
        prediction = {
            "betti": [str(b) for b in rule.betti],
            "sigma_empty_from": rule.sigma_empty_from,
        }
    except UnsupportedSpecError as err:
        prediction = {"unsupported": str(err)}

    cjson = C.to_json()
    jobs = [(cjson, list(chi.values), campaign.degree, campaign.search_L,
             campaign.search_W, campaign.witness_d_max, campaign.witness_L,
             campaign.witness_degrees)
            for chi in campaign.characters]
    if threads is None or threads <= 1 or len(jobs) <= 1:
        outcomes = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_one, jobs, chunksize=1))

    # re-verify every returned certificate in this process
    for outcome in outcomes:
        if outcome["status"] == "certified-in-sigma":
            cert = certificate_from_json(C.spec, outcome["certificate"])
            verdict = verify_certificate(cert, C)
            if not verdict.accepted:
                raise FatalInconsistencyError(
                    f"certificate for {outcome['character']} failed "
                    f"re-verification: {verdict.reason}")

    report = {
        "complex_hash": chash,
        "degree": campaign.degree,
        "parameters": campaign.params(),
        "prediction": prediction,
        "outcomes": outcomes,
        "summary": _summarize(outcomes),
    }

    empty_from = prediction.get("sigma_empty_from")
    if empty_from is not None and campaign.degree >= empty_from:
        certified = [o for o in outcomes if o["status"] == "certified-in-sigma"]
        if certified:
            report["fatal"] = [o["character"] for o in certified]
            raise FatalInconsistencyError(
                "verified certificate at degree "
                f"{campaign.degree} coexists with the prediction that the "
                f"invariant is empty from degree {empty_from}: "
                f"{report['fatal']}")
    return report


def _summarize(outcomes):
    counts = {}
    for o in outcomes:
        counts[o["status"]] = counts.get(o["status"], 0) + 1
    return counts


def summary_lines(report):
    lines = [f"degree {report['degree']}: {len(report['outcomes'])} characters"]
    pred = report["prediction"]
    if "sigma_empty_from" in pred and pred["sigma_empty_from"] is not None:
        lines.append(f"prediction: invariant empty from degree "
                     f"{pred['sigma_empty_from']} (euler rule)")
    elif "betti" in pred:
        lines.append("prediction: no vanishing obstruction (euler rule)")
    else:
        lines.append("prediction: none (group class not recognized)")
    for status, k in sorted(report["summary"].items()):
        lines.append(f"  {status}: {k}")
    return lines


# --------------------------------------------------------------------------
# finite-index transfer


class CosetTable:
    """Right-coset action of the generators on cosets of a finite-index
    subgroup; coset 0 is the subgroup itself.

    images[i] is the permutation j -> j * g_i.  The transversal element t_j
    is the first word reaching coset j in a breadth-first search, so the
    subgroup-membership test for x is: folding letters(x) from coset 0
    lands back at 0.
    """

    def __init__(self, spec: GroupSpec, images):
        self.spec = spec
        self.images = [tuple(p) for p in images]
        if len(self.images) != spec.generator_count():
            raise InvalidQuotientError("need one permutation per generator")
        k = len(self.images[0])
        for p in self.images:
            if sorted(p) != list(range(k)):
                raise InvalidQuotientError("coset images must be permutations")
        self.index = k
        self._inv = [self._inverse(p) for p in self.images]
        self.transversal = self._find_transversal()
        self._check_relators()

    @staticmethod
    def _inverse(p):
        out = [0] * len(p)
        for i, v in enumerate(p):
            out[v] = i
        return tuple(out)

    def act(self, j, data):
        for l in self.spec.letters(data):
            p = self.images[l - 1] if l > 0 else self._inv[-l - 1]
            j = p[j]
        return j

    def coset_of(self, data):
        return self.act(0, data)

    def in_subgroup(self, data):
        return self.coset_of(data) == 0

    def _find_transversal(self):
        spec = self.spec
        reps = {0: spec.identity()}
        frontier = [0]
        while frontier and len(reps) < self.index:
            new = []
            for j in frontier:
                for i in range(spec.generator_count()):
                    for sign in (1, -1):
                        p = self.images[i] if sign > 0 else self._inv[i]
                        j2 = p[j]
                        if j2 not in reps:
                            g = spec.generator(i)
                            step = g if sign > 0 else spec.invert(g)
                            reps[j2] = spec.multiply(reps[j], step)
                            new.append(j2)
            frontier = new
        if len(reps) < self.index:
            raise InvalidQuotientError("coset action is not transitive")
        return [reps[j] for j in range(self.index)]

    def _check_relators(self):
        # the action must factor through the group: fold defining relators
        spec = self.spec
        probes = []
        from .groups import DirectProduct, FreeAbelian, FreeByZ
        if isinstance(spec, FreeAbelian):
            for i in range(spec.rank):
                for j in range(i + 1, spec.rank):
                    probes.append((i + 1, j + 1, -(i + 1), -(j + 1)))
        if isinstance(spec, FreeByZ):
            t = spec.fiber_rank + 1
            for i in range(spec.fiber_rank):
                probes.append(tuple([t, i + 1, -t] +
                                    [-l for l in reversed(spec.images[i])]))
        if isinstance(spec, DirectProduct):
            for a in range(spec.generator_count()):
                for b in range(spec.generator_count()):
                    if a < b and self._xfactor(spec, a, b):
                        probes.append((a + 1, b + 1, -(a + 1), -(b + 1)))
        for word in probes:
            for j in range(self.index):
                jj = j
                for l in word:
                    p = self.images[l - 1] if l > 0 else self._inv[-l - 1]
                    jj = p[jj]
                if jj != j:
                    raise InvalidQuotientError(
                        f"coset action does not kill the relator {word}")

    @staticmethod
    def _xfactor(spec, a, b):
        fa = fb = None
        for fi, (f, off) in enumerate(zip(spec.factors, spec._offsets)):
            if off <= a < off + f.generator_count():
                fa = fi
            if off <= b < off + f.generator_count():
                fb = fi
        return fa != fb


def restrict_element(table: CosetTable, x: GroupRingElement):
    """index x index block matrix over the subgroup: t_j g = h t_{j'}."""
    spec = table.spec
    k = table.index
    blocks = [[dict() for _ in range(k)] for _ in range(k)]
    for g, coef in x.terms.items():
        for j in range(k):
            j2 = table.act(j, g)
            h = spec.multiply(table.transversal[j],
                              spec.multiply(g, spec.invert(table.transversal[j2])))
            if not table.in_subgroup(h):
                raise InvalidQuotientError("transversal arithmetic left the subgroup")
            row = blocks[j][j2]
            row[h] = row.get(h, 0) + coef
    return [[GroupRingElement(spec, blocks[j][j2]) for j2 in range(k)]
            for j in range(k)]


def _restrict_matrix(table, M):
    k = table.index
    if not M:
        return []
    out = []
    for r, row in enumerate(M):
        big_rows = [[] for _ in range(k)]
        for e in row:
            blocks = restrict_element(table, e)
            for j in range(k):
                big_rows[j].extend(blocks[j])
        out.extend(big_rows)
    return out


def finite_index_transfer_check(cert: ContractionCertificate, C: ChainComplex,
                                table: CosetTable):
    """Restrict complex and certificate along the subgroup and re-verify.

    Free modules of rank r become free modules of rank r * index via the
    coset decomposition.  The homotopy identity is re-checked exactly on the
    blocks.  Basis summands inherit a grading shift by phi of the
    transversal element, so residual positivity is checked in the shifted
    sense: an entry from coset row j to coset column j2 needs
    phi(h) - phi(t_j) + phi(t_j2) >= 1, which is exactly positivity of the
    unrestricted entries.  Returns a Verdict-like tuple (ok, reason).
    """
    if cert.complex_hash != complex_hash(C):
        return False, "certificate references a different complex"
    chi = cert.character
    k = cert.degree
    tphi = [chi(t) for t in table.transversal]
    idx = table.index

    restricted_D = {i: _restrict_matrix(table, C.boundary(i))
                    for i in range(1, C.top + 1)}
    restricted_H = [_restrict_matrix(table, H) for H in cert.maps]

    from .complexes import identity_matrix, mat_sub, matmul
    for i in range(k + 1):
        n = C.rank(i) * idx
        total = identity_matrix(n, C.spec)
        if i >= 1 and C.rank(i - 1) > 0 and restricted_H[i - 1]:
            total = mat_sub(total, matmul(restricted_D[i], restricted_H[i - 1]))
        if C.rank(i + 1) > 0 and restricted_H[i]:
            total = mat_sub(total, matmul(restricted_H[i], restricted_D[i + 1]))
        for r in range(n):
            for c in range(n):
                e = total[r][c]
                for g in e.terms:
                    if not table.in_subgroup(g):
                        return False, (f"degree {i} entry ({r},{c}) leaves "
                                       "the subgroup")
                    shift = tphi[r % idx] - tphi[c % idx]
                    if chi(g) - shift <= 0:
                        return False, (f"degree {i} entry ({r},{c}) residual "
                                       "support not positive")
    return True, None
