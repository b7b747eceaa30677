"""Floating-point evaluation of expression trees."""
from __future__ import annotations

import math
import random

from . import nodes as N


class UnboundSymbolError(KeyError):
    pass


class NumericDomainError(ValueError):
    pass


TINY = 1e-300


def _lookup(table, key_obj, name):
    if key_obj in table:
        return table[key_obj]
    if name in table:
        return table[name]
    raise UnboundSymbolError(name)


def eval_numeric(e, bindings, oracles=None) -> float:
    """Evaluate ``e`` at ``bindings`` (Var or name -> float).

    ``oracles`` maps FuncSymbol (or its name) to ``f(args, index)`` returning
    the derivative of multi-index ``index`` at the point ``args``.
    """
    oracles = oracles or {}
    vals = {}
    for node in N.walk(N.as_expr(e)):
        vals[node.id] = _eval_node(node, vals, bindings, oracles)
    return vals[e.id]


def _eval_node(node, vals, bindings, oracles):
    if isinstance(node, N.Const):
        return float(node.value)
    if isinstance(node, N.Var):
        return float(_lookup(bindings, node, node.name))
    if isinstance(node, N.FuncApp):
        f = _lookup(oracles, node.symbol, node.symbol.name)
        args = tuple(float(_lookup(bindings, a, a.name)) for a in node.symbol.args)
        return float(f(args, node.index))
    if isinstance(node, N.Sum):
        return math.fsum(vals[t.id] for t in node.terms)
    if isinstance(node, N.Product):
        out = 1.0
        for f in node.factors:
            out *= vals[f.id]
        return out
    if isinstance(node, N.Power):
        b = vals[node.base.id]
        r = node.exponent
        if r < 0 and abs(b) < TINY:
            raise ZeroDivisionError("division by (near) zero")
        if r.denominator == 1:
            return b ** int(r)
        if b < 0:
            raise NumericDomainError("fractional power of a negative number")
        return b ** float(r)
    if isinstance(node, N.Exp):
        return math.exp(vals[node.arg.id])
    if isinstance(node, N.Ln):
        a = vals[node.arg.id]
        if a <= 0:
            raise NumericDomainError("ln of a non-positive value")
        return math.log(a)
    raise TypeError(node)


class ExpSumOracle:
    """f(x) = sum_k a_k exp(b_k . x) + c . x; all derivatives are closed form.

    Used as a generic stand-in for undetermined functions: with random
    coefficients no derivative vanishes identically.
    """

    def __init__(self, nargs, rng, terms=3):
        self.a = [rng.uniform(0.5, 1.5) * rng.choice((-1, 1)) for _ in range(terms)]
        self.b = [[rng.uniform(-0.8, 0.8) for _ in range(nargs)] for _ in range(terms)]
        self.c = [rng.uniform(-1, 1) for _ in range(nargs)]
        self.c0 = rng.uniform(1.0, 2.0)

    def __call__(self, args, index):
        order = sum(index)
        total = 0.0
        for a, b in zip(self.a, self.b):
            coef = a
            for bi, k in zip(b, index):
                coef *= bi ** k
            total += coef * math.exp(sum(bi * x for bi, x in zip(b, args)))
        if order == 0:
            total += self.c0 + sum(ci * x for ci, x in zip(self.c, args))
        elif order == 1:
            total += self.c[list(index).index(1)]
        return total


def random_oracles(symbols, rng):
    return {s: ExpSumOracle(len(s.args), rng) for s in symbols}


def random_point(variables, rng, lo=0.5, hi=2.0):
    return {v: rng.uniform(lo, hi) for v in variables}


def make_rng(seed):
    return random.Random(seed)


def lambdify(exprs, variables, oracles=None):
    """Compile expressions into one function ``f(*values) -> list[float]``.

    Shared subtrees are evaluated once.  Domain problems surface as
    ZeroDivisionError, ValueError or OverflowError from ``math``.
    """
    exprs = [N.as_expr(e) for e in exprs]
    variables = [N.var(v) if isinstance(v, str) else v for v in variables]
    oracles = oracles or {}
    env = {"math": math, "_pow": _checked_pow}
    argnames = ["a%d" % i for i in range(len(variables))]
    vname = {v.id: a for v, a in zip(variables, argnames)}
    lines = []
    done = {}
    for root in exprs:
        for node in N.walk(root):
            if node.id in done:
                continue
            name = "n%d" % node.id
            if isinstance(node, N.Const):
                src = repr(float(node.value))
            elif isinstance(node, N.Var):
                if node.id not in vname:
                    raise UnboundSymbolError(node.name)
                src = vname[node.id]
            elif isinstance(node, N.FuncApp):
                f = _lookup(oracles, node.symbol, node.symbol.name)
                key = "f%d" % node.symbol.id
                env[key] = f
                args = []
                for a in node.symbol.args:
                    if a.id not in vname:
                        raise UnboundSymbolError(a.name)
                    args.append(vname[a.id])
                src = "%s((%s,), %r)" % (key, ", ".join(args), node.index)
            elif isinstance(node, N.Sum):
                src = " + ".join(done[t.id] for t in node.terms)
            elif isinstance(node, N.Product):
                src = " * ".join(done[f.id] for f in node.factors)
            elif isinstance(node, N.Power):
                src = "_pow(%s, %r)" % (done[node.base.id], node.exponent)
            elif isinstance(node, N.Exp):
                src = "math.exp(%s)" % done[node.arg.id]
            elif isinstance(node, N.Ln):
                src = "math.log(%s)" % done[node.arg.id]
            else:
                raise TypeError(node)
            lines.append("    %s = %s" % (name, src))
            done[node.id] = name
    body = "\n".join(lines) or "    pass"
    src = "def _f(%s):\n%s\n    return [%s]\n" % (", ".join(argnames), body,
                                                  ", ".join(done[e.id] for e in exprs))
    env["Fraction"] = __import__("fractions").Fraction
    exec(compile(src, "<lambdify>", "exec"), env)
    return env["_f"]


def _checked_pow(b, r):
    if r < 0 and abs(b) < TINY:
        raise ZeroDivisionError("division by (near) zero")
    if r.denominator == 1:
        return b ** int(r)
    if b < 0:
        raise NumericDomainError("fractional power of a negative number")
    return b ** float(r)
