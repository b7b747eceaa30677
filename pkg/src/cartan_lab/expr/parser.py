"""Recursive-descent parser and renderer for the expression grammar.

Grammar (precedence low to high)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

Names followed by parentheses are ``exp``, ``ln``, ``D`` or a function
symbol applied to variables.  ``D(f, t, x)`` takes either a bare symbol name
(known from ``functions`` or an earlier use) or an application ``f(t, x)``.
With ``jets={'u': ('t', 'x')}`` the names ``u``, ``u_t``, ``u_tx`` ... parse
to derivatives of ``u(t, x)``.
"""
from __future__ import annotations

import re
from fractions import Fraction

from . import nodes as N


class ParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__("%s at offset %d" % (message, offset))
        self.offset = offset
        self.message = message


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text):
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m.group(0).strip() == "":
            break
        start = m.start(1) if m.group(1) else m.start(2) if m.group(2) else m.start(3)
        if m.group(1):
            toks.append(("num", m.group(1), start))
        elif m.group(2):
            toks.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^(),":
                raise ParseError("unexpected character %r" % ch, start)
            toks.append((ch, ch, start))
        pos = m.end()
    toks.append(("end", "", len(text.rstrip()) if text.strip() else len(text)))
    return toks


class _Parser:
    def __init__(self, text, functions, jets):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.functions = dict(functions or {})
        self.jets = {k: tuple(v) for k, v in (jets or {}).items()}

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError("expected %r, found %s" % (kind, what), tok[2])
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError("unexpected %r" % tok[1], tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "end":
            op = self.take()[0]
            rhs = self.term()
            e = N.add(e, rhs) if op == "+" else N.add(e, N.neg(rhs))
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            e = N.mul(e, rhs) if op == "*" else N.mul(e, N.power(rhs, -1))
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "-":
            self.take()
            return N.neg(self.unary())
        if tok[0] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "^":
            tok = self.take()
            expo = self.unary()
            if isinstance(expo, N.Const):
                if expo.value < 0 and isinstance(base, N.Const) and base.value == 0:
                    raise ParseError("zero raised to a negative power", tok[2])
                return N.power(base, expo.value)
            return N.general_power(base, expo)
        return base

    def primary(self):
        tok = self.take()
        kind, val, pos = tok
        if kind == "num":
            return N.const(int(val))
        if kind == "(":
            e = self.expr()
            self.take(")")
            return e
        if kind == "name":
            if self.peek()[0] == "(":
                return self.call(val, pos)
            return self.name(val, pos)
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError("unexpected %s" % what, pos)

    def name(self, val, pos):
        if val in self.jets:
            return N.function(val, self.jets[val])()
        head, _, tail = val.partition("_")
        if tail and head in self.jets:
            args = self.jets[head]
            names = [a if isinstance(a, str) else a.name for a in args]
            idx = [0] * len(names)
            for ch in tail:
                if ch not in names:
                    raise ParseError("%r is not an argument of jet symbol %r" % (ch, head), pos)
                idx[names.index(ch)] += 1
            return N.funcapp(N.function(head, args), tuple(idx))
        return N.var(val)

    def args(self):
        self.take("(")
        out = [self.expr()]
        while self.peek()[0] == ",":
            self.take()
            out.append(self.expr())
        self.take(")")
        return out

    def _symbol(self, name, argnames, pos):
        known = self.functions.get(name)
        if known is not None and tuple(known) != tuple(argnames):
            raise ParseError("function %r used with arguments (%s), declared (%s)"
                             % (name, ", ".join(argnames), ", ".join(known)), pos)
        self.functions[name] = tuple(argnames)
        return N.function(name, argnames)

    def call(self, name, pos):
        if name in ("exp", "ln"):
            a = self.args()
            if len(a) != 1:
                raise ParseError("%s takes one argument" % name, pos)
            return N.exp(a[0]) if name == "exp" else N.ln(a[0])
        if name == "D":
            return self.derivative(pos)
        arg_pos = self.peek()[2]
        a = self.args()
        names = []
        for x in a:
            if not isinstance(x, N.Var):
                raise ParseError("function arguments must be variables", arg_pos)
            names.append(x.name)
        if len(set(names)) != len(names):
            raise ParseError("repeated argument in %s(...)" % name, arg_pos)
        return self._symbol(name, names, pos)()

    def derivative(self, pos):
        self.take("(")
        tok = self.peek()
        if tok[0] != "name":
            raise ParseError("D expects a function symbol", tok[2])
        if self.toks[self.i + 1][0] == "(":
            self.take()
            target = self.call(tok[1], tok[2])
            if not isinstance(target, N.FuncApp):
                raise ParseError("D expects a function symbol", tok[2])
        else:
            self.take()
            fname = tok[1]
            if fname in self.jets:
                argnames = [a if isinstance(a, str) else a.name for a in self.jets[fname]]
            elif fname in self.functions:
                argnames = list(self.functions[fname])
            else:
                raise ParseError("unknown function symbol %r" % fname, tok[2])
            target = self._symbol(fname, argnames, tok[2])()
        idx = list(target.index)
        argnames = [a.name for a in target.symbol.args]
        while self.peek()[0] == ",":
            self.take()
            vt = self.take("name")
            if vt[1] not in argnames:
                raise ParseError("%r is not an argument of %s" % (vt[1], target.symbol.name), vt[2])
            idx[argnames.index(vt[1])] += 1
        self.take(")")
        return N.funcapp(target.symbol, tuple(idx))


def parse(text: str, functions=None, jets=None) -> N.Expr:
    """Parse ``text`` into an (uncanonicalized) expression tree."""
    if not isinstance(text, str):
        raise TypeError("parse expects a string")
    return _Parser(text, functions, jets).parse()


# -- rendering ---------------------------------------------------------------

def _frac(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return "%d/%d" % (v.numerator, v.denominator)


def _prec(e):
    if isinstance(e, N.Sum):
        return 1
    if isinstance(e, N.Product):
        return 2
    if isinstance(e, N.Const):
        if e.value < 0:
            return 1
        return 2 if e.value.denominator != 1 else 4
    if isinstance(e, N.Power):
        return 3
    return 4


def render(e: N.Expr) -> str:
    """Render in the input grammar; ``parse(render(e)) is e`` for canonical e."""
    cache = {}

    def r(node):
        s = cache.get(node.id)
        if s is None:
            s = cache[node.id] = _render(node, r)
        return s
    return r(e)


def _paren(s, cond):
    return "(" + s + ")" if cond else s


def _render(e, r):
    if isinstance(e, N.Const):
        return _frac(e.value)
    if isinstance(e, N.Var):
        return e.name
    if isinstance(e, N.FuncApp):
        app = "%s(%s)" % (e.symbol.name, ", ".join(a.name for a in e.symbol.args))
        if not any(e.index):
            return app
        vs = []
        for a, k in zip(e.symbol.args, e.index):
            vs.extend([a.name] * k)
        return "D(%s, %s)" % (app, ", ".join(vs))
    if isinstance(e, N.Exp):
        return "exp(%s)" % r(e.arg)
    if isinstance(e, N.Ln):
        return "ln(%s)" % r(e.arg)
    if isinstance(e, N.Power):
        base = _paren(r(e.base), _prec(e.base) <= 3 or isinstance(e.base, N.Const))
        x = e.exponent
        ex = _frac(x) if x > 0 and x.denominator == 1 else "(%s)" % _frac(x)
        return "%s^%s" % (base, ex)
    if isinstance(e, N.Product):
        fs = list(e.factors)
        lead = ""
        if isinstance(fs[0], N.Const):
            c = fs.pop(0).value
            if c == -1:
                lead = "-"
            else:
                lead = _frac(c) + "*"
        parts = [_paren(r(f), _prec(f) <= 2) for f in fs]
        return lead + "*".join(parts)
    if isinstance(e, N.Sum):
        out = []
        for k, t in enumerate(e.terms):
            s = r(t)
            if k == 0:
                out.append(s)
            elif s.startswith("-") and _negative_lead(t):
                out.append(" - " + s[1:])
            else:
                out.append(" + " + s)
        return "".join(out)
    raise TypeError(e)


def _negative_lead(t):
    if isinstance(t, N.Const):
        return t.value < 0
    if isinstance(t, N.Product) and isinstance(t.factors[0], N.Const):
        return t.factors[0].value < 0
    return False
