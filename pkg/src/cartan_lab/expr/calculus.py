"""Partial and total derivatives, and substitution rules for jet quotients."""
from __future__ import annotations

import threading
from fractions import Fraction

from . import nodes as N
from .rational import (
    ATOM, EXP_ARG, LN_ARG, RF, RF_ONE, RF_ZERO, from_rf, make_exp, make_ln,
    rf_add, rf_atom, rf_const, rf_div, rf_mul, rf_pow, to_rf, ONE_M,
)


class MissingRuleError(ValueError):
    """A principal jet derivative was produced that no rule rewrites."""


class SubstitutionRule:
    """Rewrite ``target`` to ``replacement``.

    ``target`` is a Var or a FuncApp node.  With ``closure`` set, every
    derivative of a FuncApp target is rewritten to the matching total
    derivative of the replacement.
    """
    __slots__ = ("target", "replacement", "closure")

    def __init__(self, target, replacement, closure=False):
        if isinstance(target, str):
            target = N.var(target)
        if closure and not isinstance(target, N.FuncApp):
            raise ValueError("closure is only meaningful for function targets")
        if not isinstance(target, (N.Var, N.FuncApp)):
            raise TypeError("rule target must be a variable or a function application")
        self.target = target
        self.replacement = N.as_expr(replacement)
        self.closure = closure

    def __repr__(self):
        return "SubstitutionRule(%s -> %s%s)" % (self.target, self.replacement,
                                                 ", closure" if self.closure else "")


def _dominates(a, b):
    return all(x >= y for x, y in zip(a, b))


class Rules:
    """A set of substitution rules with memoized prolongations.

    Variable replacements are normally rewritten again until no rule applies,
    which lets definitions refer to each other.  With ``simultaneous`` each
    variable is replaced exactly once, as needed for swaps and shifts.
    """

    _lock = threading.RLock()

    def __init__(self, rules=(), simultaneous=False):
        self.rules = tuple(rules)
        self.simultaneous = simultaneous
        self.var_rules = {r.target.id: r for r in self.rules if isinstance(r.target, N.Var)}
        self.func_rules = {}
        for r in self.rules:
            if isinstance(r.target, N.FuncApp):
                self.func_rules.setdefault(r.target.symbol.id, []).append(r)
        self._atom_cache = {}
        self._deriv_cache = {}
        self._func_cache = {}

    def __bool__(self):
        return bool(self.rules)

    def _func_rule(self, node):
        """Replacement RF for a FuncApp atom, or None when it is parametric."""
        if node.id in self._func_cache:
            return self._func_cache[node.id]
        out = self._func_rule_uncached(node)
        self._func_cache[node.id] = out
        return out

    def _func_rule_uncached(self, node):
        for r in self.func_rules.get(node.symbol.id, ()):
            beta = r.target.index
            if node.index == beta:
                return self.apply(to_rf(r.replacement))
            if r.closure and _dominates(node.index, beta):
                # peel one derivative off and differentiate the reduced lower jet
                k = next(i for i, (a, b) in enumerate(zip(node.index, beta)) if a > b)
                lower = list(node.index)
                lower[k] -= 1
                low = N.funcapp(node.symbol, tuple(lower))
                base = self._func_rule(low)
                return rf_total_diff(base, node.symbol.args[k], self, reduced=True)
        return None

    def check_generated(self, node):
        for r in self.func_rules.get(node.symbol.id, ()):
            if not r.closure and node.index != r.target.index and _dominates(node.index, r.target.index):
                raise MissingRuleError("no rule covers %s (rule for %s has no closure)"
                                       % (node, r.target))

    def atom_image(self, aid):
        """RF replacing atom ``aid``; None if the atom is untouched."""
        cache = self._atom_cache
        if aid in cache:
            return cache[aid]
        node = ATOM[aid]
        img = None
        if isinstance(node, N.Var):
            r = self.var_rules.get(aid)
            if r is not None:
                img = to_rf(r.replacement)
                if not self.simultaneous:
                    img = self.apply(img)
        elif isinstance(node, N.FuncApp):
            img = self._func_rule(node)
        elif aid in EXP_ARG:
            arg = EXP_ARG[aid]
            new = self.apply(arg)
            if new is not arg:
                img = make_exp(new)
        elif aid in LN_ARG:
            arg = LN_ARG[aid]
            new = self.apply(arg)
            if new is not arg:
                img = make_ln(new)
        cache[aid] = img
        return img

    def apply(self, r: RF) -> RF:
        if not self.rules:
            return r
        touched = {a: self.atom_image(a) for a in r.atoms()}
        if all(v is None for v in touched.values()):
            return r
        return _evaluate(r, touched)


NO_RULES = Rules()


def _evaluate(r: RF, images) -> RF:
    def poly(p):
        acc = RF_ZERO
        pows = {}
        for m, c in p.items():
            plain = []
            term = rf_const(c)
            for a, e in m:
                img = images.get(a)
                if img is None:
                    plain.append((a, e))
                else:
                    key = (a, e)
                    pw = pows.get(key)
                    if pw is None:
                        pw = pows[key] = rf_pow(img, e)
                    term = rf_mul(term, pw)
            if plain:
                term = rf_mul(term, RF({tuple(plain): 1}, {ONE_M: 1}))
            acc = rf_add(acc, term)
        return acc
    n = poly(r.num)
    if len(r.den) == 1 and ONE_M in r.den:
        return rf_mul(n, rf_const(Fraction(1, r.den[ONE_M])))
    return rf_div(n, poly(r.den))


def as_rules(rules) -> Rules:
    if rules is None:
        return NO_RULES
    if isinstance(rules, Rules):
        return rules
    if isinstance(rules, SubstitutionRule):
        return Rules([rules])
    return Rules(list(rules))


# -- differentiation ---------------------------------------------------------

def _atom_deriv(aid, v, rules: Rules) -> RF:
    key = (aid, v.id)
    cache = rules._deriv_cache
    hit = cache.get(key)
    if hit is not None:
        return hit
    node = ATOM[aid]
    if isinstance(node, N.Var):
        out = RF_ONE if node is v else RF_ZERO
    elif isinstance(node, N.FuncApp):
        args = node.symbol.args
        if v in args:
            idx = list(node.index)
            idx[args.index(v)] += 1
            new = N.funcapp(node.symbol, tuple(idx))
            if rules.rules:
                rules.check_generated(new)
                img = rules._func_rule(new)
                out = img if img is not None else rf_atom(new)
            else:
                out = rf_atom(new)
        else:
            out = RF_ZERO
    elif aid in EXP_ARG:
        d = rf_total_diff(EXP_ARG[aid], v, rules, reduced=True)
        out = rf_mul(rf_atom(node), d) if d.num else RF_ZERO
    elif aid in LN_ARG:
        arg = LN_ARG[aid]
        d = rf_total_diff(arg, v, rules, reduced=True)
        out = rf_div(d, arg) if d.num else RF_ZERO
    else:
        raise TypeError("unknown atom %r" % node)
    cache[key] = out
    return out


def _poly_deriv(p, v, rules) -> RF:
    by_atom = {}
    for m, c in p.items():
        for i, (a, e) in enumerate(m):
            rest = m[:i] + ((a, e - 1),) + m[i + 1:] if e > 1 else m[:i] + m[i + 1:]
            part = by_atom.setdefault(a, {})
            part[rest] = part.get(rest, 0) + c * e
    acc = RF_ZERO
    for a, part in by_atom.items():
        da = _atom_deriv(a, v, rules)
        if not da.num:
            continue
        part = {m: c for m, c in part.items() if c}
        if part:
            acc = rf_add(acc, rf_mul(RF(part, {ONE_M: 1}), da))
    return acc


def rf_total_diff(r: RF, v, rules=NO_RULES, reduced=False) -> RF:
    if isinstance(v, str):
        v = N.var(v)
    if not reduced:
        r = rules.apply(r)
    if not r.num:
        return RF_ZERO
    dn = _poly_deriv(r.num, v, rules)
    if len(r.den) == 1 and ONE_M in r.den:
        if r.den[ONE_M] == 1:
            return dn
        return rf_mul(dn, RF({ONE_M: 1}, dict(r.den)))
    den = RF(dict(r.den), {ONE_M: 1})
    dd = _poly_deriv(r.den, v, rules)
    first = rf_div(dn, den)
    if not dd.num:
        return first
    return rf_add(first, rf_mul(rf_mul(r, rf_const(-1)), rf_div(dd, den)))


def rf_diff(r: RF, v) -> RF:
    return rf_total_diff(r, v, NO_RULES, reduced=True)


def diff(e, v, *more) -> N.Expr:
    """Partial derivative(s) in canonical form; ``diff(e, t, x)`` = e_tx."""
    r = to_rf(N.as_expr(e))
    for w in (v,) + more:
        r = rf_diff(r, w)
    return from_rf(r)


def total_diff(e, v, jet_rules=None) -> N.Expr:
    rules = as_rules(jet_rules)
    return from_rf(rf_total_diff(to_rf(N.as_expr(e)), v, rules))


def substitute(e, mapping, simultaneous=False) -> N.Expr:
    """Replace variables or function applications; returns canonical form."""
    if isinstance(mapping, dict):
        rules = Rules([SubstitutionRule(k if not isinstance(k, str) else N.var(k), val)
                       for k, val in mapping.items()], simultaneous)
    else:
        rules = as_rules(mapping)
    return from_rf(rules.apply(to_rf(N.as_expr(e))))


def reduce_mod(e, jet_rules) -> N.Expr:
    return from_rf(as_rules(jet_rules).apply(to_rf(N.as_expr(e))))
