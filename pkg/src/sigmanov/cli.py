"""Command-line interface: one executable, JSON in and out, run manifests.

Exit codes: 0 success/consistent, 1 verification reject, 2 budget or
inconclusive, 3 fatal inconsistency, 64 usage error, 70 internal exact
self-check failure.
"""

import argparse
import os
import sys
from fractions import Fraction

from . import __version__
from .budgets import cap
from .campaign import SigmaCampaign, default_characters, run_campaign, summary_lines
from .complexes import ChainComplex, euler_characteristic
from .contraction import (certificate_from_json, complex_hash, kernel_witness,
                          novikov_contraction_from_certificate, rebuild_all,
                          search_contraction, verify_certificate)
from .errors import (BudgetExceededError, FatalInconsistencyError,
                     InconclusiveError, InternalVerificationError,
                     SigmanovError, WrongComplexError)
from .fixtures import FIXTURES, fixture_names, load_fixture
from .groups import Character, spec_from_json
from .jsonio import RunManifest, canonical_dumps, file_hash, read_json, write_json
from .l2 import FiniteQuotient, betti_by_euler_rule, betti_by_quotients
from .novikov import expr_to_dag
from .ore import FiniteTracedAlgebra, TwistedPoly, approx_ore

USAGE_EXIT = 64
BUDGET_EXIT = 2
FATAL_EXIT = 3
INTERNAL_EXIT = 70


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_EXIT)


def _load_complex(args):
    if getattr(args, "fixture", None):
        spec, C, degree, _ = load_fixture(args.fixture)
        return spec, C, degree
    if getattr(args, "complex", None):
        if args.strict:
            _strict_check(args.complex)
        obj = read_json(args.complex)
        C = ChainComplex.from_json(obj)
        return C.spec, C, C.top
    raise SigmanovError("need --fixture or --complex")


def _strict_check(path):
    man = path + ".manifest.json"
    if os.path.exists(man):
        recorded = read_json(man)
        if recorded.get("file_hash") != file_hash(path):
            sys.stderr.write(f"refusing tampered input {path}\n")
            sys.exit(1)


def _parse_chars(args, spec):
    if getattr(args, "char", None):
        return [Character(spec, [Fraction(v) for v in args.char.split(",")])]
    source = getattr(args, "chars", "auto")
    if source == "auto":
        return default_characters(spec)
    if args.strict:
        _strict_check(source)
    data = read_json(source)
    return [Character.from_json(spec, c) for c in data["characters"]]


def _emit(args, name, obj, manifest):
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    write_json(path, obj)
    manifest_obj = manifest.finish("written").to_json()
    manifest_obj["file_hash"] = file_hash(path)
    write_json(path + ".manifest.json", manifest_obj)
    return path


def _manifest(args, command):
    params = {k: v for k, v in vars(args).items()
              if k not in ("func", "out") and v is not None}
    man = RunManifest(__version__, command, params)
    for key in ("complex", "certificate", "instance", "quotients", "chars"):
        path = getattr(args, key, None)
        if path and isinstance(path, str) and os.path.exists(path):
            man.add_input(key, path)
    return man


def cmd_fixtures(args):
    if args.materialize:
        man = _manifest(args, "fixtures")
        os.makedirs(args.out, exist_ok=True)
        for name in fixture_names():
            spec, C, degree, desc = load_fixture(name)
            path = os.path.join(args.out, f"{name}.complex.json")
            write_json(path, C.to_json())
            print(f"{name}: wrote {path}")
        write_json(os.path.join(args.out, "fixtures.manifest.json"),
                   man.finish("materialized").to_json())
        return 0
    for name in fixture_names():
        _, C, degree, desc = load_fixture(name)
        print(f"{name:14s} ranks {C.ranks}  default degree {degree}  -- {desc}")
    return 0


def cmd_euler(args):
    spec, C, _ = _load_complex(args)
    chi = euler_characteristic(C)
    print(f"chi = {chi}")
    try:
        rule = betti_by_euler_rule(spec, C)
        out = rule.to_json()
        print(f"euler-rule betti: {out['betti']}")
        if rule.sigma_empty_from is not None:
            print(f"invariants predicted empty from degree {rule.sigma_empty_from}")
    except SigmanovError as err:
        out = {"unsupported": str(err)}
        print(f"euler rule unsupported: {err}")
    man = _manifest(args, "euler")
    _emit(args, "euler.json", {"chi": chi, "rule": out}, man)
    return 0


def cmd_check_contraction(args):
    spec, C, default_degree = _load_complex(args)
    degree = args.degree if args.degree is not None else default_degree
    chars = _parse_chars(args, spec)
    man = _manifest(args, "check-contraction")
    results = []
    status = 0
    for chi in chars:
        out = search_contraction(C, chi, degree, args.length, args.window)
        if out.found:
            results.append({"character": list(chi.values), "found": True,
                            "certificate": out.certificate.to_json()})
            print(f"character {chi.values}: certificate found")
        else:
            results.append({"character": list(chi.values), "found": False,
                            "bounds": out.bounds})
            print(f"character {chi.values}: not found at bounds {out.bounds}")
    _emit(args, "contraction-search.json",
          {"degree": degree, "results": results}, man)
    return status


def cmd_bnsr_certify(args):
    spec, C, default_degree = _load_complex(args)
    degree = args.degree if args.degree is not None else default_degree
    chars = _parse_chars(args, spec)
    campaign = SigmaCampaign(
        spec, C, chars, degree,
        search_L=args.length, search_W=args.window,
        witness_d_max=args.depth, witness_L=args.witness_length)
    man = _manifest(args, "bnsr-certify")
    try:
        report = run_campaign(campaign, threads=args.threads)
    except FatalInconsistencyError as err:
        print(f"FATAL: {err}", file=sys.stderr)
        return FATAL_EXIT
    for line in summary_lines(report):
        print(line)
    _emit(args, os.path.basename(args.report), report, man)
    if any(o["status"] == "budget-limited" for o in report["outcomes"]):
        return BUDGET_EXIT
    return 0


def cmd_verify(args):
    spec, C, _ = _load_complex(args)
    if args.strict:
        _strict_check(args.certificate)
    cert = certificate_from_json(spec, read_json(args.certificate))
    try:
        verdict = verify_certificate(cert, C)
    except WrongComplexError as err:
        print(f"reject: {err}")
        return 1
    if verdict.accepted:
        print("accept")
        return 0
    print(f"reject: {verdict.reason}"
          + (f" at {verdict.located}" if verdict.located else ""))
    return 1


def cmd_rebuild(args):
    spec, C, _ = _load_complex(args)
    if args.strict:
        _strict_check(args.certificate)
    cert = certificate_from_json(spec, read_json(args.certificate))
    verdict = verify_certificate(cert, C)
    if not verdict.accepted:
        print(f"reject: {verdict.reason}")
        return 1
    radius = args.radius if args.radius is not None else max(2, cert.radius)
    nov = novikov_contraction_from_certificate(cert, C)
    rebuilt = rebuild_all(C, cert.character, nov, radius)
    man = _manifest(args, "rebuild")
    dag = [expr_to_dag([e for row in M.entries for e in row]) for M in rebuilt]
    shapes = [[M.rows, M.cols] for M in rebuilt]
    _emit(args, "rebuilt-contraction.json",
          {"complex_hash": cert.complex_hash,
           "character": cert.character.to_json(),
           "radius": radius, "shapes": shapes, "maps": dag}, man)
    print(f"rebuilt {len(rebuilt)} homotopies over the division closure "
          f"(verified at radius {2 * radius})")
    return 0


def cmd_kernel_witness(args):
    spec, C, default_degree = _load_complex(args)
    degree = args.degree if args.degree is not None else default_degree
    chars = _parse_chars(args, spec)
    man = _manifest(args, "kernel-witness")
    reports = []
    for chi in chars:
        rep = kernel_witness(C, chi, degree, args.depth, args.length)
        reports.append(rep.to_json())
        print(f"character {chi.values}: {rep.verdict} dims {rep.dims}")
    _emit(args, "kernel-witness.json", {"reports": reports}, man)
    return 0


def _algebra_from_json(obj):
    name = obj.get("group", "trivial")
    tau = obj.get("tau")
    if isinstance(name, dict):
        return FiniteTracedAlgebra(name["table"], tau)
    if name == "trivial":
        return FiniteTracedAlgebra.trivial()
    if name.startswith("cyclic:"):
        return FiniteTracedAlgebra.cyclic(int(name.split(":")[1]),
                                          tau if tau else "inversion")
    if name == "s3":
        return FiniteTracedAlgebra.symmetric3(tau if tau else "conjugation")
    raise SigmanovError(f"unknown algebra {name!r}")


def cmd_ore_approx(args):
    if args.strict:
        _strict_check(args.instance)
    obj = read_json(args.instance)
    alg = _algebra_from_json(obj)
    q = TwistedPoly.from_json(alg, obj["q"])
    q2 = TwistedPoly.from_json(alg, obj["q_prime"])
    eps = Fraction(obj.get("epsilon", "1/2"))
    r, r2, info = approx_ore(q, q2, eps, seed=args.seed)
    exact = (q * r == q2 * r2)
    man = _manifest(args, "ore-approx")
    out = {
        "r": r.to_json(), "r_prime": r2.to_json(),
        "k_used": info["k"],
        "d_ledger": [str(d) for d in info["d_ledger"]],
        "nullities": {"q": str(info["nul_q"]), "q_prime": str(info["nul_q2"]),
                      "r": str(info["nul_r"]), "r_prime": str(info["nul_r2"])},
        "epsilon": str(eps),
        "exact": exact,
    }
    _emit(args, "ore-approx.json", out, man)
    print(f"k = {info['k']}; exact equality: {exact}; "
          f"nul r = {info['nul_r']} < {info['nul_q2']} + {eps}")
    if not exact:
        return INTERNAL_EXIT
    return 0


def cmd_l2_approx(args):
    spec, C, _ = _load_complex(args)
    man = _manifest(args, "l2-approx")
    if args.strict and args.quotients:
        _strict_check(args.quotients)
    data = read_json(args.quotients)
    quotients = [FiniteQuotient(spec, q["images"]) for q in data["quotients"]]
    rep = betti_by_quotients(C, quotients)
    _emit(args, "l2-report.json", rep.to_json(), man)
    for order, row in zip(rep.quotient_orders, rep.per_quotient):
        print(f"|Q| = {order}: normalized betti {[str(b) for b in row]}")
    return 0


def build_parser():
    p = Parser(prog="sigmanov",
               description="exact Novikov-ring contraction certificates, "
                           "approximate Ore solving, and L2 estimates")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, complex_source=True):
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=os.cpu_count())
        sp.add_argument("--strict", action="store_true",
                        help="refuse inputs whose recorded hashes mismatch")
        if complex_source:
            sp.add_argument("--fixture", choices=fixture_names())
            sp.add_argument("--complex", help="complex JSON file")

    sp = sub.add_parser("fixtures", help="list or materialize built-in examples")
    common(sp, complex_source=False)
    sp.add_argument("--materialize", action="store_true")
    sp.set_defaults(func=cmd_fixtures)

    sp = sub.add_parser("euler", help="Euler characteristic and the euler-rule report")
    common(sp)
    sp.set_defaults(func=cmd_euler)

    sp = sub.add_parser("check-contraction", help="search for a contraction certificate")
    common(sp)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--char", help="comma-separated rational values")
    sp.add_argument("--chars", default="auto", help="'auto' or a JSON file")
    sp.add_argument("--length", type=int, default=4)
    sp.add_argument("--window", type=int, default=None)
    sp.set_defaults(func=cmd_check_contraction)

    sp = sub.add_parser("bnsr-certify", help="run the prediction-vs-outcome campaign")
    common(sp)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--char", help="comma-separated rational values")
    sp.add_argument("--chars", default="auto")
    sp.add_argument("--length", type=int, default=3)
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--depth", type=int, default=6, help="witness depth")
    sp.add_argument("--witness-length", type=int, default=None)
    sp.add_argument("--report", default="report.json")
    sp.set_defaults(func=cmd_bnsr_certify)

    sp = sub.add_parser("verify", help="re-verify a certificate file")
    common(sp)
    sp.add_argument("certificate")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("rebuild", help="rebuild a certificate over the division closure")
    common(sp)
    sp.add_argument("certificate")
    sp.add_argument("--radius", type=int)
    sp.set_defaults(func=cmd_rebuild)

    sp = sub.add_parser("kernel-witness", help="depth-by-depth witness dimensions")
    common(sp)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--char")
    sp.add_argument("--chars", default="auto")
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--length", type=int, default=8)
    sp.set_defaults(func=cmd_kernel_witness)

    sp = sub.add_parser("ore-approx", help="solve an approximate Ore instance")
    common(sp, complex_source=False)
    sp.add_argument("instance")
    sp.set_defaults(func=cmd_ore_approx)

    sp = sub.add_parser("l2-approx", help="finite-quotient Betti estimates")
    common(sp)
    sp.add_argument("--quotients", required=True, help="JSON file of quotients")
    sp.set_defaults(func=cmd_l2_approx)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_EXIT
    except (BudgetExceededError, InconclusiveError) as err:
        print(f"budget: {err}", file=sys.stderr)
        return BUDGET_EXIT
    except FatalInconsistencyError as err:
        print(f"FATAL: {err}", file=sys.stderr)
        return FATAL_EXIT
    except InternalVerificationError as err:
        print(f"internal verification failure: {err}", file=sys.stderr)
        return INTERNAL_EXIT
    except SigmanovError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
