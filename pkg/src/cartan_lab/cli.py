"""Command-line entry point: ``cartan-lab <command> ...``.

Exit codes: 0 success or PASS, 1 verified FAIL (or a verdict contradicting
``--expect``), 2 usage or input error, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import SCHEMA
from . import hunter_saxton as hs
from . import laplace as lp
from . import lisle_reid as lr
from . import verifier as vf
from .equivalence import Config, EquivalenceError, classifying_map, equivalent
from .expr.parser import ParseError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _domain(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("domain must be four numbers t0,t1,x0,x1")
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("domain must be t0,t1,x0,x1 with t0<t1 and x0<x1")
    return vals


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _samples(text):
    v = int(text)
    if v < 4:
        raise argparse.ArgumentTypeError("samples must be at least 4")
    return v


def _rational(text):
    try:
        return Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a rational number such as 1/2")


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc.strerror))
    except json.JSONDecodeError as exc:
        raise UsageError("%s is not valid JSON: %s" % (path, exc))


def _load_equation(path):
    data = _load_json(path)
    if not isinstance(data, dict):
        raise UsageError("%s: expected an object with T, X, U" % path)
    try:
        return lp.LinearHyperbolicEquation.from_json(data)
    except (ParseError, ValueError) as exc:
        raise UsageError("%s: %s" % (path, exc))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_positive, default=1e-6)
    common.add_argument("--samples", type=_samples, default=40)
    common.add_argument("--domain", type=_domain, default=lp.DEFAULT_DOMAIN,
                        help="sampling rectangle t0,t1,x0,x1")
    common.add_argument("--output", choices=("json", "text"), default="json")

    p = argparse.ArgumentParser(prog="cartan-lab", description="Exact structure-equation and invariant tools "
                                "for linear hyperbolic PDEs.", epilog=__doc__.split("\n\n")[1])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="classify u_tx = T u_t + X u_x + U u")
    c.add_argument("--eq", required=True, metavar="FILE")
    c.add_argument("--alternative", action="store_true", help="also report the alternative invariant sets")

    e = sub.add_parser("equiv", parents=[common], help="local equivalence of two equations")
    e.add_argument("--a", required=True, metavar="FILE")
    e.add_argument("--b", required=True, metavar="FILE")
    e.add_argument("--domain-b", type=_domain, default=None, help="sampling rectangle for B")
    e.add_argument("--expect", choices=("equivalent", "inequivalent"))

    m = sub.add_parser("lisle-reid", parents=[common], help="structure equations from a defining system")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--system", metavar="FILE")
    src.add_argument("--example", action="store_true", help="use the built-in two-dimensional example")
    m.add_argument("--base-point", help="comma-separated rationals; default searches a lattice")

    v = sub.add_parser("verify-structure", parents=[common], help="verify a structure-equation dataset")
    v.add_argument("--dataset", help="dataset name; omit to list")

    h = sub.add_parser("hs", parents=[common], help="Hunter-Saxton tools")
    h.add_argument("action", choices=("verify-linearization", "cascade", "solve", "map"))
    h.add_argument("--kappa", default=None, help="rational kappa; omitted means symbolic")
    h.add_argument("--S", default="0", help="S(t) for solve")
    h.add_argument("--R", default="0", help="polynomial R(x) for solve")
    h.add_argument("--emit", choices=("ep", "hs"), default="ep")

    st = sub.add_parser("selftest", parents=[common], help="run the acceptance corpus")
    st.add_argument("--only", type=int, action="append", help="criterion number (repeatable)")
    return p


def cmd_classify(args):
    eq = _load_equation(args.eq)
    try:
        sub = lp.classify(eq)
    except lp.HDegenerateError as exc:
        return EXIT_FAIL, {"error": "H-degenerate", "message": str(exc)}
    out = sub.to_json()
    if sub.tag in ("C2", "C3", "C4", "C5"):
        frame = lp.invariant_frame(eq, sub.tag, seed=args.seed)
        out["frame"] = frame.to_json()
        try:
            cmap = classifying_map(eq, frame, samples=min(args.samples, 10), seed=args.seed,
                                   domain=args.domain)
            out["classifying_rank"] = cmap.rank
        except EquivalenceError as exc:
            out["classifying_rank"] = None
            out["rank_error"] = str(exc)
    elif sub.tag == "C6":
        out["canonical_form"] = lp.canonical_form(eq).to_json()
    if args.alternative and sub.tag != "C1":
        out["alternative"] = lp.alternative_invariants(eq, seed=args.seed).to_json()
    return EXIT_OK, out


def cmd_equiv(args):
    a, b = _load_equation(args.a), _load_equation(args.b)
    cfg = Config(tol=args.tol, samples=args.samples, seed=args.seed, domain_a=args.domain,
                 domain_b=args.domain_b or args.domain)
    try:
        v = equivalent(a, b, cfg)
    except lp.HDegenerateError as exc:
        return EXIT_FAIL, {"error": "H-degenerate", "message": str(exc)}
    out = v.to_json()
    if v.verdict == "Inconclusive":
        return EXIT_INCONCLUSIVE, out
    if args.expect and args.expect != v.verdict.lower():
        return EXIT_FAIL, out
    return EXIT_OK, out


def cmd_lisle_reid(args):
    if args.example:
        system = lr.example_system()
    else:
        try:
            system = lr.DefiningSystem.from_json(_load_json(args.system))
        except (ParseError, KeyError, TypeError) as exc:
            raise UsageError("%s: %s" % (args.system, exc))
        except lr.DefiningSystemError as exc:
            return EXIT_FAIL, {"error": "invalid defining system", "message": str(exc)}
    x0 = None
    if args.base_point:
        try:
            x0 = tuple(Fraction(c) for c in args.base_point.split(","))
        except ValueError:
            raise UsageError("base point must be comma-separated rationals")
    try:
        report = lr.validate(system)
        s = lr.structure_equations(system, x0)
    except lr.SingularPointError as exc:
        return EXIT_FAIL, {"error": "singular base point", "message": str(exc)}
    except lr.DefiningSystemError as exc:
        return EXIT_FAIL, {"error": "invalid defining system", "message": str(exc)}
    except ValueError as exc:
        raise UsageError(str(exc))
    from .exterior import jacobi_check
    return EXIT_OK, {"base_point": [str(c) for c in s.base_point], "validation": report,
                     "structure": s.to_json(), "equations": [s.render_equation(f) for f in s.forms],
                     "jacobi": jacobi_check(s)}


def cmd_verify(args):
    if not args.dataset:
        return EXIT_OK, {"datasets": vf.dataset_names()}
    try:
        if args.dataset.startswith("series:"):
            from .exterior import jacobi_check
            s = vf.dataset_structure(args.dataset)
            rep = {"dataset": args.dataset, "jacobi": jacobi_check(s),
                   "structure": s.to_json()}
            rep["passed"] = rep["jacobi"]["passed"]
        else:
            rep = vf.verify_dataset(args.dataset)
    except (vf.DatasetError, FileNotFoundError) as exc:
        raise UsageError(str(exc))
    return (EXIT_OK if rep["passed"] else EXIT_FAIL), rep


def cmd_hs(args):
    kappa = None
    if args.kappa is not None:
        kappa = _rational(args.kappa)
        if kappa == 0:
            raise UsageError("kappa must be nonzero")
    if args.action == "verify-linearization":
        r = hs.verify_linearization(kappa)
        return (EXIT_OK if r.passed else EXIT_FAIL), r.to_json()
    if args.action == "cascade":
        r = hs.verify_cascade(kappa)
        return (EXIT_OK if r.passed else EXIT_FAIL), r.to_json()
    if args.action == "map":
        return EXIT_OK, hs.linearization_map(kappa).to_json()
    if kappa is None:
        raise UsageError("solve needs --kappa")
    try:
        out = hs.solve(kappa, args.S, args.R, emit=args.emit, tol=args.tol)
    except (hs.HunterSaxtonError, ParseError) as exc:
        return EXIT_FAIL, {"error": "unsupported", "message": str(exc)}
    status = out["residual_report"]["status"]
    return (EXIT_OK if status == "PASS" else EXIT_FAIL), out


def cmd_selftest(args):
    from .selftest import run_all
    results = run_all(set(args.only) if args.only else None)
    ok = all(r["passed"] for r in results)
    return (EXIT_OK if ok else EXIT_FAIL), {"criteria": results, "passed": ok}


COMMANDS = {"classify": cmd_classify, "equiv": cmd_equiv, "lisle-reid": cmd_lisle_reid,
            "verify-structure": cmd_verify, "hs": cmd_hs, "selftest": cmd_selftest}


def _text(obj, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append("%s%s:" % (pad, k))
                lines.append(_text(v, indent + 1))
            else:
                lines.append("%s%s: %s" % (pad, k, v))
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append("%s-" % pad)
                lines.append(_text(v, indent + 1))
            else:
                lines.append("%s- %s" % (pad, v))
    else:
        lines.append(pad + str(obj))
    return "\n".join(lines)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        code, out = COMMANDS[args.command](args)
    except UsageError as exc:
        print("cartan-lab: error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    out = {"schema": SCHEMA, "command": args.command, **out}
    if args.output == "text":
        print(_text(out))
    else:
        print(json.dumps(out, sort_keys=True, indent=2, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
