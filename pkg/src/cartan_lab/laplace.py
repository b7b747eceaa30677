"""Invariants and contact classification of u_tx = T u_t + X u_x + U u.

Semi-invariants H, K; contact invariants P = K/H, Q = (ln|H|)_tx / H; the
six-way split C1..C6 with per-class invariant frames; C6 normal forms; the
alternative invariant sets and a numeric functional-independence test.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .expr import nodes as N
from .expr.calculus import Rules, SubstitutionRule, diff, substitute
from .expr.canonical import canonicalize, is_zero
from .expr.numeric import lambdify, random_oracles
from .expr.parser import parse, render
from .expr.rational import ATOM, to_rf

t, x = N.var("t"), N.var("x")
DEFAULT_DOMAIN = (0.5, 2.0, 0.5, 2.0)


class ClassificationError(ValueError):
    pass


class LaplaceTrivialError(ClassificationError):
    pass


class HDegenerateError(ClassificationError):
    pass


class FrameError(ClassificationError):
    pass


@dataclass(frozen=True)
class LinearHyperbolicEquation:
    T: N.Expr
    X: N.Expr
    U: N.Expr
    nonzero: tuple = ()  # FuncApp nodes declared nonvanishing
    params: tuple = ()   # names of symbolic constants such as a free kappa

    def __post_init__(self):
        allowed = {"t", "x"} | set(self.params)
        for name in ("T", "X", "U"):
            e = N.as_expr(getattr(self, name))
            extra = {v.name for v in N.free_vars(e)} - allowed
            if extra:
                raise ValueError("%s may only depend on t, x and functions of them; found %s"
                                 % (name, ", ".join(sorted(extra))))
            object.__setattr__(self, name, canonicalize(e))

    @classmethod
    def parse(cls, T="0", X="0", U="0", facts=(), params=()):
        exprs = [parse(str(s)) for s in (T, X, U)]
        functions = {f.name: tuple(a.name for a in f.args)
                     for e in exprs for f in N.free_functions(e)}
        zero_rules, nonzero = [], []
        for fact in facts:
            kind, _, body = fact.partition(":")
            kind = kind.strip().lower()
            target = parse(body.strip(), functions)
            if not isinstance(target, N.FuncApp):
                raise ValueError("facts must name a function or one of its derivatives: %r" % fact)
            if kind == "nonzero":
                nonzero.append(target)
            elif kind == "zero":
                zero_rules.append(SubstitutionRule(target, 0, closure=True))
            else:
                raise ValueError("unknown fact kind %r (use 'zero' or 'nonzero')" % kind)
        if zero_rules:
            rules = Rules(zero_rules)
            exprs = [substitute(e, rules) for e in exprs]
        return cls(*exprs, nonzero=tuple(nonzero), params=tuple(params))

    @classmethod
    def from_json(cls, obj):
        return cls.parse(obj.get("T", "0"), obj.get("X", "0"), obj.get("U", "0"), obj.get("facts", ()),
                         obj.get("params", ()))

    def to_json(self):
        out = {"T": render(self.T), "X": render(self.X), "U": render(self.U)}
        if self.nonzero:
            out["facts"] = ["nonzero: %s" % _render_fact(f) for f in self.nonzero]
        if self.params:
            out["params"] = list(self.params)
        return out

    def swap(self):
        """The same equation with the roles of t and x exchanged."""
        return LinearHyperbolicEquation(swap_tx(self.X), swap_tx(self.T), swap_tx(self.U),
                                        tuple(swap_tx(f) for f in self.nonzero), self.params)

    def gauge(self, lam):
        """The equation for v when u = lam(t,x) v."""
        lam = N.as_expr(lam)
        lt, lx, ltx = diff(lam, t), diff(lam, x), diff(lam, t, x)
        T2 = self.T - lx / lam
        X2 = self.X - lt / lam
        U2 = (self.T * lt + self.X * lx + self.U * lam - ltx) / lam
        return LinearHyperbolicEquation(T2, X2, U2, self.nonzero, self.params)

    def substitute(self, mapping):
        """Simultaneous substitution of variables in T, X and U."""
        T, X, U = (substitute(e, mapping, simultaneous=True) for e in (self.T, self.X, self.U))
        return LinearHyperbolicEquation(T, X, U, self.nonzero, self.params)


def _render_fact(f):
    names = [a.name for a in f.symbol.args]
    derivs = [n for n, k in zip(names, f.index) for _ in range(k)]
    if not derivs:
        return "%s(%s)" % (f.symbol.name, ", ".join(names))
    return "D(%s, %s)" % (f.symbol.name, ", ".join(derivs))


_SWAP = {"t": "x", "x": "t"}


def swap_tx(e):
    """Rename t <-> x everywhere, including inside function applications."""
    memo = {}
    for node in N.walk(N.as_expr(e)):
        if isinstance(node, N.Var):
            out = N.var(_SWAP.get(node.name, node.name))
        elif isinstance(node, N.FuncApp):
            args = [_SWAP.get(a.name, a.name) for a in node.symbol.args]
            out = N.funcapp(N.function(node.symbol.name, args), node.index)
        elif isinstance(node, N.Const):
            out = node
        elif isinstance(node, N.Sum):
            out = N.add(*[memo[c.id] for c in node.terms])
        elif isinstance(node, N.Product):
            out = N.mul(*[memo[c.id] for c in node.factors])
        elif isinstance(node, N.Power):
            out = N.power(memo[node.base.id], node.exponent)
        elif isinstance(node, N.Exp):
            out = N.exp(memo[node.arg.id])
        else:
            out = N.ln(memo[node.arg.id])
        memo[node.id] = out
    return canonicalize(memo[e.id])


def wave():
    return LinearHyperbolicEquation(0, 0, 0)


def euler_poisson(kappa):
    k = N.as_expr(kappa)
    s = t + x
    params = tuple(sorted(v.name for v in N.free_vars(k)))
    return LinearHyperbolicEquation(1 / (k * s), 2 * (1 - k) / (k * s), -2 * (1 - k) / (k * s) ** 2,
                                    params=params)


def counter_example(p="p(t)", q="q(t)", declare=True):
    """The equation with P = p(t), Q = q(t) and J depending on x."""
    T = "1"
    X = "2*(%s - 1)/((%s)*(t + x))" % (p, q)
    U = "2*(1 - (%s - 1)*(t + x))/((%s)*(t + x)^2)" % (p, q)
    facts = ["nonzero: p(t)", "nonzero: q(t)", "nonzero: D(p, t)", "nonzero: D(q, t)"]
    if not (declare and p == "p(t)" and q == "q(t)"):
        facts = []
    return LinearHyperbolicEquation.parse(T, X, U, facts)


def moutard(U="U(t,x)"):
    return LinearHyperbolicEquation.parse("0", "0", U)


@dataclass(frozen=True)
class LaplacePair:
    H: N.Expr
    K: N.Expr


def laplace(eq) -> LaplacePair:
    TX = eq.T * eq.X
    H = canonicalize(-diff(eq.T, t) + TX + eq.U)
    K = canonicalize(-diff(eq.X, x) + TX + eq.U)
    return LaplacePair(H, K)


@dataclass(frozen=True)
class ContactInvariants:
    P: N.Expr
    Q: N.Expr


def _q_of(H):
    # (ln|H|)_tx / H without the logarithm
    return canonicalize((diff(H, t, x) * H - diff(H, t) * diff(H, x)) / H ** 3)


def contact_invariants(eq) -> ContactInvariants:
    lp = laplace(eq)
    if is_zero(lp.H):
        raise LaplaceTrivialError("H vanishes identically so P and Q are undefined; "
                                  "test for C1 (H = K = 0) instead")
    return ContactInvariants(canonicalize(lp.K / lp.H), _q_of(lp.H))


@dataclass
class Subclass:
    tag: str
    witness: list = field(default_factory=list)
    H: N.Expr = None
    K: N.Expr = None
    P: N.Expr = None
    Q: N.Expr = None

    def to_json(self):
        out = {"subclass": self.tag, "witness": self.witness}
        for name in ("H", "K", "P", "Q"):
            v = getattr(self, name)
            if v is not None:
                out[name] = render(v)
        return out


def _basis(e, nonzero):
    """Why a symbolically nonzero expression is taken to be nonzero."""
    r = to_rf(e)
    funcs = [ATOM[a] for m in r.num for a, _ in m if isinstance(ATOM[a], N.FuncApp)]
    if not funcs:
        return "exact"
    if len(r.num) == 1 and all(f in nonzero for f in funcs):
        return "declared"
    return "generic"


def _decide(name, e, eq, witness):
    z = is_zero(e)
    entry = {"test": name, "zero": z}
    if not z:
        entry["basis"] = _basis(e, set(eq.nonzero))
    witness.append(entry)
    return z


def classify(eq) -> Subclass:
    w = []
    lp = laplace(eq)
    h0 = _decide("H", lp.H, eq, w)
    k0 = _decide("K", lp.K, eq, w)
    if h0 and k0:
        return Subclass("C1", w, lp.H, lp.K)
    if h0:
        raise HDegenerateError("H vanishes but K does not; P = K/H is undefined. "
                               "Exchanging t and x swaps H and K and may help")
    P = canonicalize(lp.K / lp.H)
    Q = _q_of(lp.H)
    sub = Subclass("", w, lp.H, lp.K, P, Q)
    if not _decide("P_t", diff(P, t), eq, w):
        sub.tag = "C2"
    elif not _decide("P_x", diff(P, x), eq, w):
        sub.tag = "C3"
    elif not _decide("Q_t", diff(Q, t), eq, w):
        sub.tag = "C4"
    elif not _decide("Q_x", diff(Q, x), eq, w):
        sub.tag = "C5"
    else:
        sub.tag = "C6"
    return sub


@dataclass
class InvariantFrame:
    subclass: str
    invariants: dict
    operators: tuple  # ((coef, "t"), (coef, "x"))
    checked_points: int = 0

    def apply(self, i, e):
        coef, base = self.operators[i]
        return canonicalize(coef * diff(e, N.var(base)))

    def derivatives(self, order=2):
        """Basic invariants and their invariant derivatives up to ``order``."""
        out = dict(self.invariants)
        layer = dict(self.invariants)
        for _ in range(order):
            nxt = {}
            for name, e in layer.items():
                for i in (0, 1):
                    nxt["D%d(%s)" % (i + 1, name)] = self.apply(i, e)
            out.update(nxt)
            layer = nxt
        return out

    def to_json(self):
        return {
            "subclass": self.subclass,
            "invariants": {k: render(v) for k, v in self.invariants.items()},
            "operators": {"D%d" % (i + 1): {"coefficient": render(c), "base": "D_" + b}
                          for i, (c, b) in enumerate(self.operators)},
        }


def _ratio_invariant(H, F, v):
    Fv = diff(F, v)
    return canonicalize((diff(H, v) * Fv - H * diff(Fv, v)) / (H * Fv ** 2))


def invariant_frame(eq, subclass=None, check_points=8, seed=0) -> InvariantFrame:
    sub = classify(eq)
    if subclass is not None and subclass != sub.tag:
        raise FrameError("equation is in %s, not %s" % (sub.tag, subclass))
    H, P, Q = sub.H, sub.P, sub.Q
    tag = sub.tag
    if tag == "C2":
        Pt = diff(P, t)
        inv = {"P": P, "Q": Q, "J": _ratio_invariant(H, P, t)}
        ops = ((canonicalize(1 / Pt), "t"), (canonicalize(Pt / H), "x"))
    elif tag == "C3":
        Px = diff(P, x)
        inv = {"P": P, "Q": Q, "L": _ratio_invariant(H, P, x)}
        ops = ((canonicalize(Px / H), "t"), (canonicalize(1 / Px), "x"))
    elif tag == "C4":
        Qt = diff(Q, t)
        inv = {"Q": Q, "M1": canonicalize(diff(Q, t, x) / H), "M2": _ratio_invariant(H, Q, t)}
        ops = ((canonicalize(1 / Qt), "t"), (canonicalize(Qt / H), "x"))
    elif tag == "C5":
        Qx = diff(Q, x)
        inv = {"Q": Q, "N": _ratio_invariant(H, Q, x)}
        ops = ((canonicalize(Qx / H), "t"), (canonicalize(1 / Qx), "x"))
    else:
        raise FrameError("%s has no invariant frame; it is described by finite data" % tag)
    frame = InvariantFrame(tag, inv, ops)
    frame.checked_points = _check_nonvanishing([c for c, _ in ops], check_points, seed)
    return frame


def _check_nonvanishing(exprs, n, seed, domain=DEFAULT_DOMAIN):
    rng = random.Random(seed)
    syms = set()
    for e in exprs:
        syms |= N.free_functions(e)
    oracles = random_oracles(sorted(syms, key=lambda s: s.name), rng)
    f = lambdify(exprs, [t, x], oracles)
    good = 0
    for _ in range(20 * n):
        pt = (rng.uniform(domain[0], domain[1]), rng.uniform(domain[2], domain[3]))
        try:
            vals = f(*pt)
        except (ZeroDivisionError, ValueError, OverflowError):
            continue
        if all(abs(v) > 1e-8 for v in vals):
            good += 1
            if good >= n:
                return good
    raise FrameError("operator coefficients vanish or are singular at every sampled point")


def canonical_form(eq) -> LinearHyperbolicEquation:
    sub = classify(eq)
    if sub.tag != "C6":
        raise ClassificationError("canonical forms exist for C6 only; equation is in %s" % sub.tag)
    P, Q = sub.P, sub.Q
    if is_zero(Q):
        return LinearHyperbolicEquation(-t, -P * x, -P * t * x)
    s = t + x
    return LinearHyperbolicEquation(2 / (Q * s), 2 * P / (Q * s), -4 * P / (Q ** 2 * s ** 2))


@dataclass
class AlternativeInvariants:
    values: dict
    degenerate: list
    independence: dict

    def to_json(self):
        return {
            "invariants": {k: (render(v) if v is not None else None) for k, v in self.values.items()},
            "degenerate": self.degenerate,
            "independence": self.independence,
        }


def alternative_invariants(eq, samples=10, seed=0) -> AlternativeInvariants:
    """Invariant sets proposed as complete bases, with a rank test against J."""
    lp = laplace(eq)
    H, K = lp.H, lp.K
    if is_zero(H):
        raise LaplaceTrivialError("H vanishes identically; the alternative invariants are undefined")
    Ht, Hx, Kt, Kx = diff(H, t), diff(H, x), diff(K, t), diff(K, x)
    Htt, Hxx, Ktt, Kxx = diff(Ht, t), diff(Hx, x), diff(Kt, t), diff(Kx, x)
    Htx, Ktx = diff(Ht, x), diff(Kt, x)
    P = canonicalize(K / H)
    Q = _q_of(H)
    Pt, Px = diff(P, t), diff(P, x)
    vals = {
        "P": P,
        "Q": Q,
        "J13": canonicalize((K * Htx + H * Ktx - Ht * Kx - Hx * Kt) / H ** 3),
        "J23": canonicalize((H * Kx - K * Hx) ** 2 * (H * K * Htt - H ** 2 * Ktt - 3 * K * Ht ** 2
                                                      + 3 * H * Ht * Kt) / H ** 9),
        "J33": canonicalize((H * Kt - K * Ht) ** 2 * (H * K * Hxx - H ** 2 * Kxx - 3 * K * Hx ** 2
                                                      + 3 * H * Hx * Kx) / H ** 9),
        "I": canonicalize(Pt * Px / H),
        "Qtilde": None,
        "J": None,
    }
    problems = []
    if is_zero(K):
        problems.append("Qtilde undefined: K vanishes identically")
    else:
        vals["Qtilde"] = _q_of(K)
    pt0, px0 = is_zero(Pt), is_zero(Px)
    if pt0:
        problems.append("J and the operator P_t^-1 D_t undefined: P_t vanishes identically")
    else:
        vals["J"] = _ratio_invariant(H, P, t)
    if px0:
        problems.append("operator P_x^-1 D_x undefined: P_x vanishes identically")
    degenerate = []
    ops_bad = pt0 or px0
    for members, missing in ((("P", "Q", "I", "Qtilde"), vals["Qtilde"] is None),
                             (("P", "Q", "I", "J"), vals["J"] is None)):
        if ops_bad or missing:
            degenerate.append("basis degenerate for {%s}: %s" % (", ".join(members), "; ".join(problems)))
    independence = {}
    if vals["J"] is not None:
        base = [vals[k] for k in ("P", "Q", "J13", "J23", "J33", "I", "Qtilde") if vals[k] is not None]
        r0, r1, pts = _rank_pair(base, vals["J"], samples, seed)
        independence = {"rank_without_J": r0, "rank_with_J": r1, "points": pts,
                        "verdict": "independent" if r1 > r0 else "dependent"}
    return AlternativeInvariants(vals, degenerate, independence)


def gradient_rank_samples(exprs, samples, seed, domain=DEFAULT_DOMAIN, rtol=1e-8):
    """Numeric rank of d(exprs)/d(t,x) at ``samples`` generic points; returns max rank and points."""
    grads = []
    for e in exprs:
        grads += [diff(e, t), diff(e, x)]
    rng = random.Random(seed)
    syms = set()
    for e in grads:
        syms |= N.free_functions(e)
    oracles = random_oracles(sorted(syms, key=lambda s: s.name), rng)
    f = lambdify(grads, [t, x], oracles)
    ranks = []
    tries = 0
    while len(ranks) < samples and tries < 50 * samples:
        tries += 1
        pt = (rng.uniform(domain[0], domain[1]), rng.uniform(domain[2], domain[3]))
        try:
            g = np.array(f(*pt), dtype=float).reshape(len(exprs), 2)
        except (ZeroDivisionError, ValueError, OverflowError):
            continue
        if not np.all(np.isfinite(g)):
            continue
        sv = np.linalg.svd(g, compute_uv=False)
        ranks.append(int(np.sum(sv > rtol * max(sv[0], 1.0))) if sv.size else 0)
    if not ranks:
        raise ClassificationError("no generic sample point found")
    return max(ranks), len(ranks)


def _rank_pair(base, extra, samples, seed):
    r0, n = gradient_rank_samples(base, samples, seed)
    r1, _ = gradient_rank_samples(base + [extra], samples, seed)
    return r0, r1, n
