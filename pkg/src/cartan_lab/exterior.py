"""Differential forms on a coordinate chart with exact coefficients.

Forms of degree 0..3 are sparse maps from strictly increasing coordinate
index tuples to canonical rational functions (``RF``).  Besides the usual
algebra this module solves ideal-membership problems ``r = sum a_i ^ g_i``
and the joint linear systems that arise when several structure equations
share unknown one-forms.
"""
from __future__ import annotations

import json
import random
from fractions import Fraction

import numpy as np

from .expr import nodes as N
from .expr.calculus import as_rules, rf_diff
from .expr.canonical import _numeric_probe, _transcendental
from .expr.numeric import eval_numeric
from .expr.parser import parse, render
from .expr.rational import (
    ATOM, EXP_ARG, LN_ARG, RF, RF_ONE, RF_ZERO, from_rf, rf_add, rf_div,
    rf_mul, rf_neg, rf_size, to_rf,
)


class ChartError(ValueError):
    pass


class DependentGeneratorsError(ValueError):
    pass


class Chart:
    """Ordered coordinates plus constant parameters (d = 0)."""

    def __init__(self, coords, constants=(), jet_rules=None, name=None):
        self.coords = tuple(N.var(c) if isinstance(c, str) else c for c in coords)
        if len(set(self.coords)) != len(self.coords):
            raise ChartError("coordinates must be pairwise distinct")
        self.constants = frozenset(N.var(c) if isinstance(c, str) else c for c in constants)
        if self.constants & set(self.coords):
            raise ChartError("a symbol cannot be both coordinate and constant")
        self.rules = as_rules(jet_rules)
        for r in self.rules.rules:
            if r.target in self.coords:
                raise ChartError("jet rules may not target chart coordinates")
        self.index = {c: i for i, c in enumerate(self.coords)}
        self.name = name
        self._allowed = set(self.coords) | set(self.constants)
        self._checked = set()

    @property
    def dim(self):
        return len(self.coords)

    def __repr__(self):
        return "Chart(%s)" % ", ".join(c.name for c in self.coords)

    def scalar(self, f) -> RF:
        """Coerce to a reduced RF, applying jet rules and checking symbols."""
        if isinstance(f, RF):
            r = f
        else:
            r = to_rf(N.as_expr(f) if not isinstance(f, (int, Fraction)) else N.const(f))
        r = self.rules.apply(r)
        self._check(r)
        return r

    def _check(self, r):
        for a in r.atoms():
            if a in self._checked:
                continue
            node = ATOM[a]
            if isinstance(node, N.Var):
                if node not in self._allowed:
                    raise ChartError("free symbol %s is neither a coordinate nor a constant" % node.name)
            elif isinstance(node, N.FuncApp):
                raise ChartError("function symbol %s cannot appear on a chart" % node)
            elif a in EXP_ARG:
                self._check(EXP_ARG[a])
            elif a in LN_ARG:
                self._check(LN_ARG[a])
            self._checked.add(a)

    def d(self, coord):
        """The coordinate differential d<coord> as a one-form."""
        c = N.var(coord) if isinstance(coord, str) else coord
        if c not in self.index:
            raise ChartError("%s is not a coordinate" % c)
        return Form(self, 1, {(self.index[c],): RF_ONE})

    def differentials(self):
        return {c.name: self.d(c) for c in self.coords}

    def partial(self, r: RF, i: int) -> RF:
        return self.rules.apply(rf_diff(r, self.coords[i]))


def _merge_sign(a, b):
    """Sign and sorted index tuple of dx^a ^ dx^b, or (0, None)."""
    if set(a) & set(b):
        return 0, None
    seq = list(a) + list(b)
    sign = 1
    # insertion sort counting transpositions
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(seq)


class Form:
    """A differential form of degree 0..3 on ``chart``."""
    __slots__ = ("chart", "degree", "coeffs")

    def __init__(self, chart, degree, coeffs=None):
        self.chart = chart
        self.degree = degree
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if v.num}

    # construction -----------------------------------------------------------
    @classmethod
    def one(cls, chart, mapping):
        """One-form from {coordinate name or Var: coefficient}."""
        out = {}
        for k, v in mapping.items():
            c = N.var(k) if isinstance(k, str) else k
            if c not in chart.index:
                raise ChartError("%s is not a coordinate" % c)
            out[(chart.index[c],)] = chart.scalar(v)
        return cls(chart, 1, out)

    @classmethod
    def zero(cls, chart, degree):
        return cls(chart, degree, {})

    # algebra ----------------------------------------------------------------
    def _same(self, other):
        if not isinstance(other, Form):
            raise TypeError("expected a Form")
        if other.chart is not self.chart:
            raise ChartError("chart mismatch")
        if other.degree != self.degree:
            raise ChartError("degree mismatch: %d vs %d" % (self.degree, other.degree))

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._same(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = rf_add(out[k], v) if k in out else v
        return Form(self.chart, self.degree, out)

    __radd__ = __add__

    def __neg__(self):
        return Form(self.chart, self.degree, {k: rf_neg(v) for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f):
        r = f if isinstance(f, RF) else self.chart.scalar(f)
        if not r.num:
            return Form(self.chart, self.degree, {})
        return Form(self.chart, self.degree, {k: rf_mul(r, v) for k, v in self.coeffs.items()})

    def __mul__(self, f):
        if isinstance(f, Form):
            return wedge(self, f)
        return self.scale(f)

    __rmul__ = scale

    def __xor__(self, other):
        return wedge(self, other)

    def is_zero(self):
        return not self.coeffs

    def coeff(self, *coords) -> N.Expr:
        idx = [self.chart.index[N.var(c) if isinstance(c, str) else c] for c in coords]
        sign, key = _merge_sign(tuple(idx[:1]), tuple(idx[1:])) if len(idx) > 1 else (1, tuple(idx))
        if sign == 0:
            return N.ZERO
        r = self.coeffs.get(key)
        if r is None:
            return N.ZERO
        return from_rf(r if sign > 0 else rf_neg(r))

    def components(self):
        """Sorted list of (coordinate names, canonical Expr)."""
        out = []
        for k in sorted(self.coeffs):
            out.append((tuple(self.chart.coords[i].name for i in k), from_rf(self.coeffs[k])))
        return out

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for names, e in self.components():
            parts.append("(%s)*%s" % (render(e), "^".join("d" + n for n in names)))
        return " + ".join(parts)

    def to_json(self):
        return {"chart": [c.name for c in self.chart.coords],
                "degree": self.degree,
                "coeffs": {"^".join("d" + n for n in names): render(e)
                           for names, e in self.components()}}


OneForm = Form
TwoForm = Form
ThreeForm = Form


def form_from_json(obj, chart=None, functions=None):
    if chart is None:
        chart = Chart(obj["chart"], obj.get("constants", ()))
    degree = obj.get("degree", 1)
    out = {}
    for key, text in obj["coeffs"].items():
        names = [p[1:] if p.startswith("d") else p for p in key.split("^")]
        if len(names) != degree:
            raise ChartError("component %r does not match degree %d" % (key, degree))
        idx = []
        for n in names:
            v = N.var(n)
            if v not in chart.index:
                raise ChartError("%s is not a coordinate" % n)
            idx.append(chart.index[v])
        sign, k = (1, tuple(idx)) if degree == 1 else _merge_sign(tuple(idx[:1]), tuple(idx[1:]))
        if degree == 3:
            sign, k = _merge_sign((idx[0],), tuple(idx[1:]))
            s2, k2 = _merge_sign((idx[1],), (idx[2],))
            sign, k = _merge_sign((idx[0],), k2) if s2 else (0, None)
            sign *= s2
        if sign == 0:
            continue
        r = chart.scalar(parse(text, functions=functions))
        out[k] = rf_add(out[k], r if sign > 0 else rf_neg(r)) if k in out else (r if sign > 0 else rf_neg(r))
    return Form(chart, degree, out)


def wedge(a: Form, b: Form) -> Form:
    if a.chart is not b.chart:
        raise ChartError("chart mismatch")
    deg = a.degree + b.degree
    if deg > a.chart.dim:
        return Form(a.chart, deg, {})
    out = {}
    for ka, va in a.coeffs.items():
        for kb, vb in b.coeffs.items():
            sign, k = _merge_sign(ka, kb)
            if not sign:
                continue
            v = rf_mul(va, vb)
            if sign < 0:
                v = rf_neg(v)
            out[k] = rf_add(out[k], v) if k in out else v
    return Form(a.chart, deg, out)


def d(f, chart: Chart = None) -> Form:
    """Exterior derivative of a scalar (needs ``chart``) or of a Form."""
    if isinstance(f, Form):
        chart = f.chart
        out = {}
        for k, v in f.coeffs.items():
            for i in range(chart.dim):
                if i in k:
                    continue
                dv = chart.partial(v, i)
                if not dv.num:
                    continue
                sign, key = _merge_sign((i,), k)
                if sign < 0:
                    dv = rf_neg(dv)
                out[key] = rf_add(out[key], dv) if key in out else dv
        return Form(chart, f.degree + 1, out)
    if chart is None:
        raise TypeError("d of a scalar needs a chart")
    r = chart.scalar(f)
    out = {}
    for i in range(chart.dim):
        dv = chart.partial(r, i)
        if dv.num:
            out[(i,)] = dv
    return Form(chart, 1, out)


def _rf_zero_checked(r: RF) -> bool:
    if not r.num:
        return True
    if _transcendental(r):
        _numeric_probe(from_rf(r))
    return False


def forms_equal(a: Form, b: Form) -> bool:
    a._same(b)
    diff = a - b
    return all(_rf_zero_checked(v) for v in diff.coeffs.values())


# -- linear algebra over the rational-function field ------------------------

def _pivot_score(r: RF):
    return (0 if r.is_const() else 1, rf_size(r))


def _row_reduce(rows, ncols, transform=None):
    """Gauss-Jordan in place on a list of sparse rows {col: RF}.

    Returns the list of (row index, pivot column).  Pivots are chosen per
    row by exact nonzeroness, preferring constants and small entries.
    """
    pivots = []
    used = set()
    for i, row in enumerate(rows):
        cand = [c for c, v in row.items() if v.num and c not in used]
        if not cand:
            continue
        c = min(cand, key=lambda j: (_pivot_score(row[j]), j))
        inv = rf_div(RF_ONE, row[c])
        rows[i] = row = {j: rf_mul(v, inv) for j, v in row.items()}
        if transform is not None:
            transform[i] = {j: rf_mul(v, inv) for j, v in transform[i].items()}
        for k, other in enumerate(rows):
            if k == i or c not in other:
                continue
            f = other[c]
            new = dict(other)
            for j, v in row.items():
                w = rf_add(new[j], rf_neg(rf_mul(f, v))) if j in new else rf_neg(rf_mul(f, v))
                if w.num:
                    new[j] = w
                else:
                    new.pop(j, None)
            rows[k] = new
            if transform is not None:
                tnew = dict(transform[k])
                for j, v in transform[i].items():
                    w = rf_add(tnew[j], rf_neg(rf_mul(f, v))) if j in tnew else rf_neg(rf_mul(f, v))
                    if w.num:
                        tnew[j] = w
                    else:
                        tnew.pop(j, None)
                transform[k] = tnew
        pivots.append((i, c))
        used.add(c)
    return pivots


def solve_ideal(residual: Form, generators):
    """One-forms a_i with residual = sum a_i ^ g_i, or None if none exist.

    Raises DependentGeneratorsError when the generators are linearly
    dependent over the coefficient field.
    """
    if residual.degree != 2:
        raise ValueError("solve_ideal expects a two-form residual")
    chart = residual.chart
    gens = list(generators)
    m = len(gens)
    for g in gens:
        if g.chart is not chart or g.degree != 1:
            raise ChartError("generators must be one-forms on the residual's chart")
    if m == 0:
        return [] if residual.is_zero() else None
    rows = [{k[0]: v for k, v in g.coeffs.items()} for g in gens]
    transform = [{i: RF_ONE} for i in range(m)]
    pivots = _row_reduce(rows, chart.dim, transform)
    if len(pivots) < m:
        raise DependentGeneratorsError("generators are linearly dependent")
    piv_of = {}
    for i, c in pivots:
        piv_of[c] = i
    # f_a: the part of dx^a outside the ideal, expressed in non-pivot dx
    f = {}
    for c, i in piv_of.items():
        f[c] = {j: rf_neg(v) for j, v in rows[i].items() if j != c}
    alpha_p = [dict() for _ in range(m)]
    rbar = {}

    def acc(target, key, val):
        target[key] = rf_add(target[key], val) if key in target else val

    def f_of(a):
        return f[a] if a in f else {a: RF_ONE}

    for (a, b), r in residual.coeffs.items():
        if a in piv_of:
            acc(alpha_p[piv_of[a]], b, rf_neg(r))
        if b in piv_of:
            for j, v in f_of(a).items():
                acc(alpha_p[piv_of[b]], j, rf_mul(r, v))
        fa, fb = f_of(a), f_of(b)
        for ja, va in fa.items():
            for jb, vb in fb.items():
                if ja == jb:
                    continue
                val = rf_mul(r, rf_mul(va, vb))
                key = (ja, jb) if ja < jb else (jb, ja)
                acc(rbar, key, val if ja < jb else rf_neg(val))
    if any(v.num for v in rbar.values()):
        return None
    # back to the original generators: alpha_j = sum_k T_kj alpha'_k
    alphas = []
    for j in range(m):
        comp = {}
        for k in range(m):
            tkj = transform[k].get(j)
            if tkj is None:
                continue
            for col, v in alpha_p[k].items():
                acc(comp, col, rf_mul(tkj, v))
        alphas.append(Form(chart, 1, {(c,): v for c, v in comp.items()}))
    check = Form.zero(chart, 2)
    for a, g in zip(alphas, gens):
        check = check + wedge(a, g)
    if not forms_equal(check, residual):
        raise ArithmeticError("internal error: ideal solution failed verification")
    return alphas


def solve_linear(rows, rhs, nvars, with_determined=False):
    """Solve sum_j rows[i][j] x_j = rhs[i] over the RF field.

    Returns (solution dict, nullity) or (None, None) when inconsistent;
    free variables are set to zero.  With ``with_determined`` a third item
    lists the variables whose value does not depend on the free ones.
    Rows are eliminated sparsely, shortest first, with a column index so
    only rows containing the pivot column are touched.
    """
    aug = []
    for row, b in zip(rows, rhs):
        r = {j: v for j, v in row.items() if v.num}
        if b.num:
            r[nvars] = b
        if r:
            aug.append(r)
    cols = {}
    for i, r in enumerate(aug):
        for j in r:
            cols.setdefault(j, set()).add(i)
    order = sorted(range(len(aug)), key=lambda i: (len(aug[i]), i))
    pivots = []
    used = set()
    for i in order:
        row = aug[i]
        cand = [c for c in row if c != nvars and c not in used]
        if not cand:
            if nvars in row:
                return (None, None, None) if with_determined else (None, None)
            continue
        c = min(cand, key=lambda j: (_pivot_score(row[j]), len(cols.get(j, ())), j))
        inv = rf_div(RF_ONE, row[c])
        aug[i] = row = {j: rf_mul(v, inv) for j, v in row.items()}
        for k in list(cols.get(c, ())):
            if k == i:
                continue
            other = aug[k]
            fct = other[c]
            for j, v in row.items():
                w = rf_neg(rf_mul(fct, v))
                if j in other:
                    w = rf_add(other[j], w)
                if w.num:
                    if j not in other:
                        cols.setdefault(j, set()).add(k)
                    other[j] = w
                else:
                    other.pop(j, None)
                    cols[j].discard(k)
        pivots.append((i, c))
        used.add(c)
    sol = {}
    determined = set()
    for i, c in pivots:
        sol[c] = aug[i].get(nvars, RF_ZERO)
        if all(j == c or j == nvars for j in aug[i]):
            determined.add(c)
    if with_determined:
        return sol, nvars - len(pivots), determined
    return sol, nvars - len(pivots)


def numeric_rank(forms, samples=10, seed=0, lo=0.5, hi=2.0, tol=1e-8):
    """Minimum numeric rank of the coefficient matrix over random points."""
    if not forms:
        return 0
    chart = forms[0].chart
    rng = random.Random(seed)
    symbols = sorted(set(chart.coords) | set(chart.constants), key=lambda v: v.name)
    exprs = [[from_rf(f.coeffs[(i,)]) if (i,) in f.coeffs else None for i in range(chart.dim)]
             for f in forms]
    ranks = []
    tries = 0
    while len(ranks) < samples and tries < samples * 10:
        tries += 1
        pt = {v: rng.uniform(lo, hi) for v in symbols}
        try:
            mat = np.array([[eval_numeric(e, pt) if e is not None else 0.0 for e in row]
                            for row in exprs])
        except (ZeroDivisionError, ValueError, OverflowError):
            continue
        s = np.linalg.svd(mat, compute_uv=False)
        ranks.append(int(np.sum(s > tol * max(s[0], 1e-300))))
    return min(ranks) if ranks else 0


# -- constant-coefficient structures -----------------------------------------

class AbstractStructure:
    """Structure equations with constant coefficients.

    ``forms`` are the names omega^1..omega^n, ``pis`` the auxiliary names.
    ``equations[name]`` is a dict mapping a pair of basis names (in basis
    order) to a Fraction: the coefficient of ``first ^ second``.
    """

    def __init__(self, forms, pis=(), equations=None):
        self.forms = list(forms)
        self.pis = list(pis)
        names = self.forms + self.pis
        if len(set(names)) != len(names):
            raise ValueError("form and pi names must be distinct")
        self.order = {n: i for i, n in enumerate(names)}
        self.equations = {}
        for lhs, terms in (equations or {}).items():
            self.set_equation(lhs, terms)

    @property
    def basis(self):
        return self.forms + self.pis

    def set_equation(self, lhs, terms):
        if lhs not in self.forms:
            raise ValueError("equation for unknown form %r" % lhs)
        out = {}
        items = terms.items() if isinstance(terms, dict) else terms
        for key, c in items:
            a, b = key
            c = Fraction(c)
            if a not in self.order or b not in self.order:
                raise ValueError("unknown name in d%s: %s^%s" % (lhs, a, b))
            if a == b or c == 0:
                continue
            if self.order[a] > self.order[b]:
                a, b, c = b, a, -c
            out[(a, b)] = out.get((a, b), 0) + c
            if out[(a, b)] == 0:
                del out[(a, b)]
        self.equations[lhs] = out

    def equation(self, lhs):
        return self.equations.get(lhs, {})

    def pi_terms(self, lhs):
        """[(pi, form, a)] meaning a * pi ^ form."""
        out = []
        for (a, b), c in self.equation(lhs).items():
            if a in self.pis and b in self.forms:
                out.append((a, b, c))
            elif b in self.pis and a in self.forms:
                out.append((b, a, -c))
        return out

    def c_terms(self, lhs):
        return [(a, b, c) for (a, b), c in self.equation(lhs).items()
                if a in self.forms and b in self.forms]

    def __eq__(self, other):
        if not isinstance(other, AbstractStructure):
            return NotImplemented
        return (self.forms == other.forms and self.pis == other.pis
                and all(self.equation(f) == other.equation(f) for f in self.forms))

    def render_equation(self, lhs):
        terms = sorted(self.equation(lhs).items(), key=lambda kv: (self.order[kv[0][0]], self.order[kv[0][1]]))
        if not terms:
            return "d%s = 0" % lhs
        parts = []
        for (a, b), c in terms:
            mag = abs(c)
            coef = "" if mag == 1 else "%s*" % mag
            sign = "-" if c < 0 else "+"
            parts.append("%s %s%s^%s" % (sign, coef, a, b))
        s = " ".join(parts)
        s = s[2:] if s.startswith("+ ") else "-" + s[2:]
        return "d%s = %s" % (lhs, s)

    def __repr__(self):
        return "\n".join(self.render_equation(f) for f in self.forms)

    def to_json(self):
        eqs = {}
        for lhs in self.forms:
            pt = sorted([[self.pis.index(p) + 1, self.forms.index(f) + 1, _num(a)]
                         for p, f, a in self.pi_terms(lhs)])
            ct = sorted([[self.forms.index(a) + 1, self.forms.index(b) + 1, _num(c)]
                         for a, b, c in self.c_terms(lhs)])
            other = [[a, b, _num(c)] for (a, b), c in self.equation(lhs).items()
                     if a in self.pis and b in self.pis]
            e = {"pi_terms": pt, "c_terms": ct}
            if other:
                e["pi_pi_terms"] = sorted(other)
            eqs[lhs] = e
        return {"forms": list(self.forms), "pis": list(self.pis), "equations": eqs}

    @classmethod
    def from_json(cls, obj):
        s = cls(obj["forms"], obj.get("pis", ()))
        for lhs, e in obj.get("equations", {}).items():
            terms = []
            for rho, j, a in e.get("pi_terms", []):
                terms.append(((s.pis[int(rho) - 1], s.forms[int(j) - 1]), Fraction(str(a))))
            for j, k, c in e.get("c_terms", []):
                terms.append(((s.forms[int(j) - 1], s.forms[int(k) - 1]), Fraction(str(c))))
            for a, b, c in e.get("pi_pi_terms", []):
                terms.append(((a, b), Fraction(str(c))))
            s.set_equation(lhs, terms)
        return s

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def _num(c: Fraction):
    return int(c) if c.denominator == 1 else "%d/%d" % (c.numerator, c.denominator)


def _const_wedge(a, b, order):
    """Wedge of constant-coefficient forms keyed by sorted name tuples."""
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            ia = tuple(order[n] for n in ka)
            ib = tuple(order[n] for n in kb)
            sign, key = _merge_sign(ia, ib)
            if not sign:
                continue
            names = tuple(sorted(ka + kb, key=order.get))
            out[names] = out.get(names, 0) + sign * va * vb
    return {k: v for k, v in out.items() if v}


def _const_d(form, s, dpi_zero=True):
    """Exterior derivative of a constant-coefficient form under ``s``."""
    out = {}
    for key, c in form.items():
        for pos, name in enumerate(key):
            if name in s.pis:
                continue
            dn = {k: v for k, v in s.equation(name).items()}
            left = {key[:pos]: Fraction(1)}
            right = {key[pos + 1:]: Fraction(1)}
            term = _const_wedge(_const_wedge(left, dn, s.order), right, s.order)
            sign = -1 if pos % 2 else 1
            for k, v in term.items():
                out[k] = out.get(k, 0) + sign * c * v
    return {k: v for k, v in out.items() if v}


def jacobi_check(s: AbstractStructure):
    """d(d omega^i) = 0 modulo what the unknown d(pi) can absorb.

    For each equation the three-form d(d omega^i) is expanded with d(pi)
    set to zero; the terms left over must lie in the ideal generated by the
    forms omega^j paired with some pi in that equation, since those are
    exactly the terms sum d(pi) ^ omega^j can cancel.  Returns a report
    dict with ``passed`` and the offending components.
    """
    failures = {}
    for lhs in s.forms:
        eq = s.equation(lhs)
        dd = _const_d(eq, s)
        absorb = {f for _, f, _ in s.pi_terms(lhs)}
        left = {k: v for k, v in dd.items() if not (set(k) & absorb)}
        if left:
            failures[lhs] = {"^".join(k): str(v) for k, v in sorted(
                left.items(), key=lambda kv: [s.order[n] for n in kv[0]])}
    return {"passed": not failures, "obstructions": failures}
