"""The acceptance corpus as runnable checks.

Each ``criterion_N`` returns a dict with ``passed`` and a short ``detail``;
``run_all`` times them.  Used by the ``selftest`` CLI command and the
acceptance test module.
"""
from __future__ import annotations

import math
import random
import time
from fractions import Fraction

from . import exterior as X
from . import hunter_saxton as hs
from . import laplace as lp
from . import lisle_reid as lr
from . import verifier as vf
from .equivalence import Config, equivalent, shift_t
from .expr import nodes as N
from .expr.calculus import diff
from .expr.canonical import canonicalize, is_zero
from .expr.numeric import eval_numeric
from .expr.parser import parse

TITLES = {
    1: "classification corpus",
    2: "counter-example invariants and independence of J",
    3: "Moutard degeneracy",
    4: "defining-system structure equations",
    5: "structure-equation datasets",
    6: "cross-presentation substitutions",
    7: "Diff(R) series and Liouville product",
    8: "Hunter-Saxton linearization",
    9: "property suites and verdict stability",
}


def criterion_1():
    start = time.perf_counter()
    half = Fraction(1, 2)
    cases = [
        ("wave", lp.wave(), "C1", None),
        ("EP(1/2)", lp.euler_poisson(half), "C6", (1, 1)),
        ("EP(2)", lp.euler_poisson(2), "C6", (-2, 4)),
        ("counter-example", lp.counter_example(), "C2", None),
    ]
    notes, ok = [], True
    for name, eq, tag, pq in cases:
        sub = lp.classify(eq)
        good = sub.tag == tag
        if pq is not None:
            good = good and sub.P == N.const(pq[0]) and sub.Q == N.const(pq[1])
        ok = ok and good
        notes.append("%s->%s" % (name, sub.tag))
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5
    return {"passed": ok, "detail": "%s in %.2fs" % (", ".join(notes), elapsed)}


def j_closed_form(first="p"):
    """Closed form of J for the counter-example; ``first`` picks whose derivative
    divides the leading term (only "p" is right)."""
    first = "D(%s(t), t)" % first
    return parse("-2/(%s*(t+x)) - D(p(t),t,t)/D(p(t),t)^2 - D(q(t),t)/(D(p(t),t)*q(t))" % first)


def criterion_2():
    start = time.perf_counter()
    eq = lp.counter_example()
    ai = lp.alternative_invariants(eq, samples=10)
    v = ai.values
    p, q = parse("p(t)"), parse("q(t)")
    checks = {
        "J13": v["J13"] == canonicalize(2 * p * q),
        "J23": is_zero(v["J23"]),
        "J33": is_zero(v["J33"]),
        "I": is_zero(v["I"]),
        "Qtilde": v["Qtilde"] == canonicalize(q / p),
        "J": is_zero(v["J"] - j_closed_form("p")),
        "J_q_variant_differs": not is_zero(v["J"] - j_closed_form("q")),
        "rank": ai.independence.get("rank_with_J") == ai.independence.get("rank_without_J", -9) + 1,
    }
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 10
    bad = [k for k, good in checks.items() if not good]
    return {"passed": ok, "detail": "rank %s->%s at %s points, %.2fs%s" % (
        ai.independence.get("rank_without_J"), ai.independence.get("rank_with_J"),
        ai.independence.get("points"), elapsed, "; failed: " + ", ".join(bad) if bad else "")}


def criterion_3():
    eq = lp.moutard()
    ci = lp.contact_invariants(eq)
    P = ci.P
    ai = lp.alternative_invariants(eq)
    checks = [
        P == N.ONE,
        is_zero(diff(P, lp.t)) and is_zero(diff(P, lp.x)),
        is_zero(ai.values["I"]),
        ai.values["Qtilde"] == ci.Q,
        len([d for d in ai.degenerate if d.startswith("basis degenerate")]) == 2,
    ]
    return {"passed": all(checks), "detail": "P=1, P_t=P_x=I=0, %d degenerate bases" % len(ai.degenerate)}


def criterion_4():
    sys_ = lr.example_system()
    s1 = lr.structure_equations(sys_, (0, 1))
    s2 = lr.structure_equations(sys_, (0, 2))
    exp1 = {"w1": {("w1", "w2"): Fraction(-1)}, "w2": {("pi1", "w1"): Fraction(1)}}
    got1 = {f: _oriented(s1.equation(f)) for f in s1.forms}
    c2 = _oriented(s2.equation("w1")).get(("w1", "w2"))
    liou = vf.dataset_structure("lisle_reid_liouville")
    jac = [X.jacobi_check(s)["passed"] for s in (s1, s2, liou)]
    ok = got1 == exp1 and c2 == Fraction(-1, 2) and all(jac)
    return {"passed": ok, "detail": "y0=1 exact: %s, y0=2 coefficient %s, jacobi %s"
            % (got1 == exp1, c2, jac)}


def _oriented(eq):
    """Equation terms with each pair written pi-first, then in numeric order."""
    out = {}
    for (a, b), c in eq.items():
        if b.startswith("pi") and not a.startswith("pi"):
            a, b, c = b, a, -c
        elif not a.startswith("pi") and not b.startswith("pi") and a > b:
            a, b, c = b, a, -c
        out[(a, b)] = out.get((a, b), 0) + c
    return {k: v for k, v in out.items() if v}


DATASETS_5 = ("liouville_cartan", "liouville_moving_coframe", "euler_poisson", "hunter_saxton", "cont_j2_n2")


def criterion_5():
    start = time.perf_counter()
    notes, ok = [], True
    for name in DATASETS_5:
        rep = vf.verify_dataset(name)
        n = len(rep.get("claims", {}))
        ok = ok and rep["passed"]
        notes.append("%s %s (%d claims)" % (name, "PASS" if rep["passed"] else "FAIL", n))
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60
    return {"passed": ok, "detail": "; ".join(notes) + "; %.1fs" % elapsed}


def criterion_6():
    rep = vf.verify_dataset("lisle_reid_liouville")
    subs = rep.get("substitutions", {})
    ok = len(subs) == 3 and all(r["passed"] for r in subs.values())
    return {"passed": ok, "detail": ", ".join("%s %s" % (k, "PASS" if r["passed"] else "FAIL")
                                             for k, r in sorted(subs.items()))}


def criterion_7():
    series_ok = all(X.jacobi_check(vf.diffeo_r_series(n))["passed"] for n in range(1, 9))
    prod = vf.liouville_product_check(4)
    ok = series_ok and prod["passed"]
    return {"passed": ok, "detail": "series N=1..8 jacobi %s; product copies %s, sigma3 %s"
            % (series_ok, prod["copies_match_diffeo_series"], prod["sigma3_terms"])}


def criterion_8():
    start = time.perf_counter()
    t6 = hs.verify_linearization(None).passed
    cas = hs.verify_cascade(None).passed
    pq = hs.p_plus_q(None) == N.const(2)
    cat = hs.catalog()
    ep_ok = all(is_zero(hs.ep_residual(hs.general_solution_ep(k, S, R), k)) for k, S, R in cat)
    worst = 0.0
    hs_ok = True
    for k, S, R in cat:
        if R == "0":
            continue  # the parametrization is degenerate without R
        U, T, Xp = hs.general_solution_hs(k, S, R)
        num = hs.hs_residual_numeric(U, T, Xp, k, grid=10)
        worst = max(worst, num["max_relative_residual"])
        hs_ok = hs_ok and num["max_relative_residual"] < 1e-6
    elapsed = time.perf_counter() - start
    ok = t6 and cas and pq and ep_ok and hs_ok and elapsed < 120
    return {"passed": ok, "detail": "linearization %s, cascade %s, P+Q=2 %s, EP catalog %d/%d, "
            "HS max residual %.1e, %.1fs" % (t6, cas, pq, len(cat) if ep_ok else 0, len(cat), worst, elapsed)}


# -- randomized property checks (stdlib RNG so the CLI needs no test deps) --

VARS = ("t", "x", "y")


def random_expr(rng, depth, functions=True):
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.45:
            return N.var(rng.choice(VARS))
        if r < 0.7 or not functions:
            return N.const(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        return N.function(rng.choice("fg"), ("t", "x"))()
    op = rng.random()
    if op < 0.35:
        return N.add(random_expr(rng, depth - 1, functions), random_expr(rng, depth - 1, functions))
    if op < 0.7:
        return N.mul(random_expr(rng, depth - 1, functions), random_expr(rng, depth - 1, functions))
    if op < 0.85:
        base = N.add(random_expr(rng, depth - 1, functions), N.const(rng.randint(2, 4)))
        if isinstance(base, N.Const) and base.value == 0:
            return base
        return N.power(base, rng.choice((-2, -1, 2, 3)))
    if op < 0.95:
        return N.exp(N.mul(N.const(Fraction(1, rng.randint(1, 3))), random_expr(rng, 1, functions)))
    return N.ln(N.add(N.power(N.var(rng.choice(VARS)), 2), N.ONE))


def random_one_form(rng, chart, depth=2):
    return X.Form.one(chart, {c.name: random_expr(rng, depth, False) for c in chart.coords})


def property_cases(n=500, seed=0):
    """Counts of passing cases for each property; every count must equal n."""
    from .expr.numeric import random_oracles
    rng = random.Random(seed)
    chart = X.Chart(VARS)
    t, x = N.var("t"), N.var("x")
    counts = {"d_squared": 0, "leibniz": 0, "mixed_partials": 0, "idempotent": 0, "eval_consistent": 0}
    for _ in range(n):
        a, b = random_one_form(rng, chart), random_one_form(rng, chart)
        f = random_expr(rng, 3, False)
        if X.d(X.d(a)).is_zero() and X.d(X.d(f, chart)).is_zero():
            counts["d_squared"] += 1
        if X.forms_equal(X.d(X.wedge(a, b)), X.wedge(X.d(a), b) - X.wedge(a, X.d(b))):
            counts["leibniz"] += 1
        e = random_expr(rng, 4)
        if diff(diff(e, t), x) == diff(diff(e, x), t):
            counts["mixed_partials"] += 1
        c = canonicalize(e)
        if canonicalize(c) == c:
            counts["idempotent"] += 1
        counts["eval_consistent"] += _eval_consistent(e, c, rng, random_oracles)
    return counts


def _eval_consistent(e, c, rng, random_oracles):
    oracles = random_oracles(sorted(N.free_functions(e), key=lambda s: s.name), rng)
    for _ in range(20):
        pt = {v: rng.uniform(0.5, 2.0) for v in VARS}
        try:
            a = eval_numeric(e, pt, oracles)
            b = eval_numeric(c, pt, oracles)
        except (ZeroDivisionError, ValueError, OverflowError):
            continue
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        return int(abs(a - b) <= 1e-9 * (1 + abs(a)) or ill_conditioned(e, pt, oracles, a, b))
    return 1  # no admissible point: nothing to compare


def ill_conditioned(e, pt, oracles, a, b):
    """Cancellation in the raw tree makes the bound meaningless; accept if the
    terms' magnitudes explain the gap."""
    biggest = 0.0
    for node in N.walk(e):
        try:
            biggest = max(biggest, abs(eval_numeric(node, pt, oracles)))
        except (ZeroDivisionError, ValueError, OverflowError):
            return False
    return abs(a - b) <= 1e-9 * (1 + biggest)


CORPUS_9 = "point-shifted counter-example pair and EP(1/2) vs EP(2)"


def verdict_stability(seeds=(0, 1, 2)):
    a = lp.counter_example("t", "1+t")
    b = shift_t(a, Fraction(3, 10))
    out = []
    for seed in seeds:
        v1 = equivalent(a, b, Config(seed=seed, domain_b=(0.2, 1.7, 0.5, 2.0))).verdict
        v2 = equivalent(lp.euler_poisson(Fraction(1, 2)), lp.euler_poisson(2), Config(seed=seed)).verdict
        out.append((v1, v2))
    return out


def criterion_9(n=500):
    counts = property_cases(n)
    verdicts = verdict_stability()
    ok = all(v == n for v in counts.values()) and all(v == ("Equivalent", "Inequivalent") for v in verdicts)
    return {"passed": ok, "detail": "%s of %d; verdicts %s" % (counts, n, sorted(set(verdicts)))}


CRITERIA = {i: globals()["criterion_%d" % i] for i in range(1, 10)}


def run_all(selected=None):
    results = []
    for i, fn in CRITERIA.items():
        if selected and i not in selected:
            continue
        start = time.perf_counter()
        try:
            r = fn()
        except Exception as exc:  # report, do not abort the corpus
            r = {"passed": False, "detail": "%s: %s" % (type(exc).__name__, exc)}
        r.update(id=i, title=TITLES[i], seconds=round(time.perf_counter() - start, 2))
        results.append(r)
    return results
