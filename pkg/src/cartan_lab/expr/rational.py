"""Rational functions over atoms: the normal form behind canonicalize.

A polynomial is a dict mapping a monomial to a nonzero Python int.  A
monomial is a tuple of ``(atom_id, exponent)`` pairs sorted by atom id.
Atoms are variables, function applications, ``ln(...)`` and ``exp(...)``
nodes.  An ``RF`` is a reduced fraction of two such polynomials with a
positive leading denominator coefficient.

Exponentials are kept merged: a monomial carries at most one exp atom and
only to the first power, and ``exp(n*ln(A) + r)`` with integer ``n`` is
written ``A^n * exp(r)``.  Multivariate gcds are delegated to FLINT.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd as igcd

import flint

from . import nodes as N

ATOM: dict = {}      # atom id -> node
EXP_ARG: dict = {}   # exp atom id -> RF of its argument
LN_ARG: dict = {}    # ln atom id -> RF of its argument

ONE_M = ()
_SENTINEL = ((9,), 0)


class RF:
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = num
        self.den = den

    def is_zero(self):
        return not self.num

    def is_const(self):
        return (not self.num or (len(self.num) == 1 and ONE_M in self.num)) and _is_one_const(self.den)

    def const_value(self):
        if not self.num:
            return Fraction(0)
        return Fraction(self.num[ONE_M], self.den[ONE_M])

    def is_poly(self):
        return self.den == _ONE_POLY

    def atoms(self):
        out = set()
        for p in (self.num, self.den):
            for m in p:
                for a, _ in m:
                    out.add(a)
        return out

    def __eq__(self, other):
        return isinstance(other, RF) and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((frozenset(self.num.items()), frozenset(self.den.items())))

    def __add__(self, other):
        return rf_add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return rf_add(self, rf_neg(_coerce(other)))

    def __rsub__(self, other):
        return rf_add(_coerce(other), rf_neg(self))

    def __mul__(self, other):
        return rf_mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return rf_div(self, _coerce(other))

    def __rtruediv__(self, other):
        return rf_div(_coerce(other), self)

    def __neg__(self):
        return rf_neg(self)

    def __pow__(self, n):
        return rf_pow(self, int(n))

    def __repr__(self):
        from .parser import render
        return "RF(%s)" % render(from_rf(self))


_ONE_POLY = {ONE_M: 1}


def _is_one_const(p):
    return len(p) == 1 and ONE_M in p


def _coerce(x):
    if isinstance(x, RF):
        return x
    if isinstance(x, N.Expr):
        return to_rf(x)
    return rf_const(x)


def rf_const(c) -> RF:
    c = Fraction(c)
    if c == 0:
        return RF({}, dict(_ONE_POLY))
    return RF({ONE_M: c.numerator}, {ONE_M: c.denominator})


RF_ZERO = rf_const(0)
RF_ONE = rf_const(1)


def rf_atom(node) -> RF:
    ATOM[node.id] = node
    return RF({((node.id, 1),): 1}, dict(_ONE_POLY))


# -- polynomial arithmetic --------------------------------------------------

def m_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x[0] == y[0]:
            e = x[1] + y[1]
            if e:
                out.append((x[0], e))
            i += 1
            j += 1
        elif x[0] < y[0]:
            out.append(x)
            i += 1
        else:
            out.append(y)
            j += 1
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return tuple(out)


def m_div(a, b):
    """a / b for monomials; b must divide a."""
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        r = d[v] - e
        if r:
            d[v] = r
        else:
            del d[v]
    return tuple(sorted(d.items()))


def m_divides(b, a):
    if not b:
        return True
    d = dict(a)
    for v, e in b:
        if d.get(v, 0) < e:
            return False
    return True


def p_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    r = dict(a)
    for m, c in b.items():
        v = r.get(m)
        if v is None:
            r[m] = c
        else:
            v += c
            if v:
                r[m] = v
            else:
                del r[m]
    return r


def p_neg(a):
    return {m: -c for m, c in a.items()}


def p_scale(a, k):
    if k == 1:
        return a
    if k == 0:
        return {}
    return {m: c * k for m, c in a.items()}


def p_mul(a, b):
    if len(a) == 1 and ONE_M in a:
        return p_scale(b, a[ONE_M])
    if len(b) == 1 and ONE_M in b:
        return p_scale(a, b[ONE_M])
    r = {}
    get = r.get
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = m_mul(ma, mb)
            v = get(m, 0) + ca * cb
            if v:
                r[m] = v
            else:
                r.pop(m, None)
    return r


def p_mul_mono(a, mono, k=1):
    return {m_mul(m, mono): c * k for m, c in a.items()}


def p_pow(a, n):
    result = dict(_ONE_POLY)
    base = a
    while n:
        if n & 1:
            result = p_mul(result, base)
        n >>= 1
        if n:
            base = p_mul(base, base)
    return result


def p_content(a):
    g = 0
    for c in a.values():
        g = igcd(g, c)
        if g == 1:
            break
    return g


def p_atoms(a):
    s = set()
    for m in a:
        for v, _ in m:
            s.add(v)
    return s


def p_is_const(a):
    return not a or (len(a) == 1 and ONE_M in a)


# -- monomial order ---------------------------------------------------------

def atom_key(aid):
    node = ATOM[aid]
    k = node._skey
    if k is None:
        from .parser import render
        if isinstance(node, N.Var):
            k = (0, node.name)
        elif isinstance(node, N.FuncApp):
            k = (1, node.symbol.name, tuple(a.name for a in node.symbol.args), tuple(-i for i in node.index))
        elif isinstance(node, N.Ln):
            k = (2, render(node.arg))
        else:
            k = (3, render(node.arg))
        node._skey = k
    return k


_mkey_cache: dict = {}


def mono_key(m):
    """Smaller key means larger monomial (lex order over atom keys)."""
    k = _mkey_cache.get(m)
    if k is None:
        pairs = sorted(((atom_key(a), -e) for a, e in m), key=lambda p: p[0])
        pairs.append(_SENTINEL)
        k = _mkey_cache[m] = tuple(pairs)
    return k


def leading(p):
    return min(p, key=mono_key)


def sorted_monos(p):
    return sorted(p, key=mono_key)


# -- gcd --------------------------------------------------------------------

def _mono_gcd_poly(mono, p):
    """Largest monomial dividing ``mono`` and every monomial of ``p``."""
    common = dict(mono)
    for m in p:
        if not common:
            break
        dm = dict(m)
        for v in list(common):
            e = min(common[v], dm.get(v, 0))
            if e:
                common[v] = e
            else:
                del common[v]
    return tuple(sorted(common.items()))


def _flint_ctx(atoms):
    k = max(len(atoms), 1)
    return flint.fmpz_mpoly_ctx.get(("x", k), "lex")


def _to_flint(p, ctx, index, k):
    d = {}
    for m, c in p.items():
        vec = [0] * k
        for v, e in m:
            vec[index[v]] = e
        d[tuple(vec)] = c
    return ctx.from_dict(d)


def _from_flint(f, order):
    out = {}
    for vec, c in f.to_dict().items():
        m = tuple((order[i], int(e)) for i, e in enumerate(vec) if e)
        out[m] = int(c)
    return out


def p_gcd_cofactors(a, b):
    """Return (g, a/g, b/g) with g = gcd(a, b) over the integers."""
    if len(b) == 1 or len(a) == 1:
        if len(a) == 1:
            (ma, ca), = a.items()
            mg = _mono_gcd_poly(ma, b)
            cg = igcd(ca, p_content(b))
        else:
            (mb, cb), = b.items()
            mg = _mono_gcd_poly(mb, a)
            cg = igcd(cb, p_content(a))
        g = {mg: cg}
        return g, p_div_mono(a, mg, cg), p_div_mono(b, mg, cg)
    atoms = sorted(p_atoms(a) | p_atoms(b))
    index = {v: i for i, v in enumerate(atoms)}
    k = max(len(atoms), 1)
    ctx = _flint_ctx(atoms)
    fa = _to_flint(a, ctx, index, k)
    fb = _to_flint(b, ctx, index, k)
    fg = fa.gcd(fb)
    if fg.is_one():
        return dict(_ONE_POLY), a, b
    return _from_flint(fg, atoms), _from_flint(fa / fg, atoms), _from_flint(fb / fg, atoms)


def p_div_mono(a, mono, c=1):
    out = {}
    for m, v in a.items():
        q, r = divmod(v, c)
        assert r == 0
        out[m_div(m, mono) if mono else m] = q
    return out


def p_exact_div(a, b):
    if len(b) == 1:
        (mb, cb), = b.items()
        return p_div_mono(a, mb, cb)
    atoms = sorted(p_atoms(a) | p_atoms(b))
    index = {v: i for i, v in enumerate(atoms)}
    k = max(len(atoms), 1)
    ctx = _flint_ctx(atoms)
    return _from_flint(_to_flint(a, ctx, index, k) / _to_flint(b, ctx, index, k), atoms)


# -- exponential bookkeeping -------------------------------------------------

def _needs_fix(p):
    for m in p:
        n = 0
        for v, e in m:
            if v in EXP_ARG:
                n += 1
                if e != 1 or n > 1:
                    return True
    return False


def _fix_exps(p):
    """Rewrite monomials holding several or powered exp atoms; returns RF."""
    plain = {}
    extra = None
    for m, c in p.items():
        exps = [(v, e) for v, e in m if v in EXP_ARG]
        if not exps or (len(exps) == 1 and exps[0][1] == 1):
            plain[m] = plain.get(m, 0) + c
            continue
        rest = tuple((v, e) for v, e in m if v not in EXP_ARG)
        arg = RF_ZERO
        for v, e in exps:
            arg = rf_add(arg, rf_mul(rf_const(e), EXP_ARG[v]))
        term = rf_mul(make_exp(arg), RF({rest: c}, dict(_ONE_POLY)))
        extra = term if extra is None else rf_add(extra, term)
    plain = {m: c for m, c in plain.items() if c}
    base = RF(plain, dict(_ONE_POLY))
    return base if extra is None else rf_add(base, extra)


def _exp_free_term(p):
    for m in p:
        if not any(v in EXP_ARG for v, _ in m):
            return True
    return False


def _exp_of_mono(m):
    for v, _ in m:
        if v in EXP_ARG:
            return v
    return None


def _make(num, den, coprime=False, depth=0):
    if depth > 25:
        raise RuntimeError("exponential normalization did not settle")
    if not num:
        return RF({}, dict(_ONE_POLY))
    if not den:
        raise ZeroDivisionError("division by zero rational function")
    if EXP_ARG and (_needs_fix(num) or _needs_fix(den)):
        n = _fix_exps(num) if _needs_fix(num) else RF(num, dict(_ONE_POLY))
        d = _fix_exps(den) if _needs_fix(den) else RF(den, dict(_ONE_POLY))
        return _make(p_mul(n.num, d.den), p_mul(n.den, d.num), False, depth + 1)
    if EXP_ARG and not _exp_free_term(den):
        e = _exp_of_mono(leading(den))
        u = make_exp(rf_neg(EXP_ARG[e]))
        # multiplying top and bottom by u; its own denominator cancels
        return _make(p_mul(num, u.num), p_mul(den, u.num), False, depth + 1)
    if not coprime and not _is_one_const(den):
        g, num, den = p_gcd_cofactors(num, den)
    elif _is_one_const(den):
        c = den[ONE_M]
        if c != 1:
            g = igcd(p_content(num), c)
            if g != 1:
                num = p_scale_div(num, g)
                den = {ONE_M: c // g}
    lc = den[leading(den)] if len(den) > 1 else next(iter(den.values()))
    if lc < 0:
        num = p_neg(num)
        den = p_neg(den)
    return RF(num, den)


def p_scale_div(a, g):
    return {m: c // g for m, c in a.items()}


# -- rational function arithmetic -------------------------------------------

def rf_neg(a):
    return RF(p_neg(a.num), a.den)


def rf_add(a, b):
    if not a.num:
        return b
    if not b.num:
        return a
    if a.den == b.den:
        n = p_add(a.num, b.num)
        if not n:
            return RF_ZERO
        if _is_one_const(a.den) and a.den[ONE_M] == 1:
            return _make(n, a.den, coprime=True)
        return _make(n, a.den)
    if _is_one_const(a.den) and _is_one_const(b.den):
        da, db = a.den[ONE_M], b.den[ONE_M]
        return _make(p_add(p_scale(a.num, db), p_scale(b.num, da)), {ONE_M: da * db})
    if _is_one_const(b.den) or _is_one_const(a.den):
        if _is_one_const(a.den):
            a, b = b, a
        # b has constant denominator c: (na*c + nb*da)/(da*c)
        c = b.den[ONE_M]
        n = p_add(p_scale(a.num, c), p_mul(b.num, a.den))
        d = p_scale(a.den, c)
        if c == 1:
            return _make(n, d, coprime=True) if not EXP_ARG else _make(n, d)
        return _make(n, d)
    g, da, db = p_gcd_cofactors(a.den, b.den)
    n = p_add(p_mul(a.num, db), p_mul(b.num, da))
    if not n:
        return RF_ZERO
    return _make(n, p_mul(a.den, db))


def rf_mul(a, b):
    if not a.num or not b.num:
        return RF_ZERO
    an, ad, bn, bd = a.num, a.den, b.num, b.den
    if not _is_one_const(bd):
        _, an, bd = p_gcd_cofactors(an, bd)
    if not _is_one_const(ad):
        _, bn, ad = p_gcd_cofactors(bn, ad)
    num = p_mul(an, bn)
    den = p_mul(ad, bd)
    if _is_one_const(den):
        return _make(num, den)
    return _make(num, den, coprime=not EXP_ARG)


def rf_inv(a):
    if not a.num:
        raise ZeroDivisionError("inverse of zero")
    return _make(a.den, a.num, coprime=True)


def rf_div(a, b):
    return rf_mul(a, rf_inv(b))


def rf_pow(a, n):
    if n == 0:
        return RF_ONE
    if n < 0:
        a = rf_inv(a)
        n = -n
    if n == 1:
        return a
    return _make(p_pow(a.num, n), p_pow(a.den, n), coprime=True)


def rf_scale(a, c):
    return rf_mul(a, rf_const(c))


# -- exp / ln atoms ---------------------------------------------------------

def make_exp(arg: RF) -> RF:
    if not arg.num:
        return RF_ONE
    factor = RF_ONE
    if len(arg.den) == 1:
        (md, cd), = arg.den.items()
        keep = {}
        changed = False
        for m, c in arg.num.items():
            if m_divides(md, m):
                r = m_div(m, md)
                if len(r) == 1 and r[0][1] == 1 and r[0][0] in LN_ARG:
                    # q*ln(A) with rational q: pull out A^floor(q)
                    n = c // cd
                    if n:
                        factor = rf_mul(factor, rf_pow(LN_ARG[r[0][0]], n))
                        changed = True
                        if c - n * cd:
                            keep[m] = c - n * cd
                        continue
            keep[m] = c
        if changed:
            arg = _make(keep, arg.den) if keep else RF_ZERO
    if not arg.num:
        return factor
    node = N._raw_exp(from_rf(arg))
    if node.id not in EXP_ARG:
        EXP_ARG[node.id] = arg
        ATOM[node.id] = node
    atom = RF({((node.id, 1),): 1}, dict(_ONE_POLY))
    if factor is RF_ONE:
        return atom
    return rf_mul(factor, atom)


def make_ln(arg: RF) -> RF:
    if not arg.num:
        raise ValueError("ln(0)")
    if arg.is_const() and arg.const_value() == 1:
        return RF_ZERO
    if _is_one_const(arg.den) and arg.den[ONE_M] == 1 and len(arg.num) == 1:
        (m, c), = arg.num.items()
        if c == 1 and len(m) == 1 and m[0][1] == 1 and m[0][0] in EXP_ARG:
            return EXP_ARG[m[0][0]]
    node = N._raw_ln(from_rf(arg))
    if node.id not in LN_ARG:
        LN_ARG[node.id] = arg
        ATOM[node.id] = node
    return RF({((node.id, 1),): 1}, dict(_ONE_POLY))


# -- conversion -------------------------------------------------------------

def to_rf(e: N.Expr) -> RF:
    r = e._rf
    if r is not None:
        return r
    # iterative post-order to avoid deep recursion on long chains
    for node in N.walk(e):
        if node._rf is None:
            node._rf = _node_rf(node)
    return e._rf


def _node_rf(node):
    if isinstance(node, N.Const):
        return rf_const(node.value)
    if isinstance(node, (N.Var, N.FuncApp)):
        return rf_atom(node)
    if isinstance(node, N.Sum):
        acc = RF_ZERO
        for t in node.terms:
            acc = rf_add(acc, t._rf)
        return acc
    if isinstance(node, N.Product):
        acc = RF_ONE
        for f in node.factors:
            acc = rf_mul(acc, f._rf)
        return acc
    if isinstance(node, N.Power):
        r = node.exponent
        if r.denominator == 1:
            return rf_pow(node.base._rf, int(r))
        return make_exp(rf_mul(rf_const(r), make_ln(node.base._rf)))
    if isinstance(node, N.Exp):
        return make_exp(node.arg._rf)
    if isinstance(node, N.Ln):
        return make_ln(node.arg._rf)
    raise TypeError(node)


def _term_expr(m, c):
    factors = [N.power(ATOM[v], e) for v, e in sorted(m, key=lambda p: atom_key(p[0]))]
    return N.mul(N.const(c), *factors)


def poly_expr(p):
    if not p:
        return N.ZERO
    return N.add(*[_term_expr(m, p[m]) for m in sorted_monos(p)])


def from_rf(r: RF) -> N.Expr:
    if _is_one_const(r.den):
        c = r.den[ONE_M]
        if c == 1:
            e = poly_expr(r.num)
        else:
            e = N.add(*[_term_expr(m, Fraction(r.num[m], c)) for m in sorted_monos(r.num)])
    else:
        e = N.mul(poly_expr(r.num), N.power(poly_expr(r.den), -1))
    if e._rf is None:
        e._rf = r
    return e


def rf_size(r: RF) -> int:
    return len(r.num) + len(r.den)
