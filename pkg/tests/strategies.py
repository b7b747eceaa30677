"""Hypothesis strategies for expressions, plus a bridge to sympy used as an
independent oracle."""
from fractions import Fraction

import sympy as sp
from hypothesis import strategies as st

from cartan_lab.expr import nodes as N
from cartan_lab.expr.parser import render

VARS = ("t", "x", "y")

rationals = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4))
leaves = st.one_of(st.sampled_from(VARS).map(N.var), rationals.map(N.const))
func_leaves = st.sampled_from(["f", "g"]).map(lambda n: N.function(n, ("t", "x"))())


def _shifted_power(e, k, c):
    base = N.add(e, N.const(c))
    if isinstance(base, N.Const) and base.value == 0:
        return base
    return N.power(base, k)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda ab: N.add(*ab)),
        st.tuples(children, children).map(lambda ab: N.mul(*ab)),
        st.tuples(children, st.sampled_from([-2, -1, 2, 3]), st.integers(2, 4)).map(
            lambda a: _shifted_power(*a)),
        st.tuples(rationals, children).map(lambda a: N.exp(N.mul(N.const(a[0] / 3), a[1]))),
    )


def exprs(functions=False, max_leaves=8):
    base = st.one_of(leaves, func_leaves) if functions else leaves
    return st.recursive(base, _extend, max_leaves=max_leaves)


def polys(variables=("t", "x"), max_leaves=6):
    base = st.one_of(st.sampled_from(variables).map(N.var), rationals.map(N.const))
    return st.recursive(base, lambda c: st.one_of(
        st.tuples(c, c).map(lambda ab: N.add(*ab)),
        st.tuples(c, c).map(lambda ab: N.mul(*ab))), max_leaves=max_leaves)


SYMS = {n: sp.Symbol(n) for n in ("t", "x", "y", "k")}


def to_sympy(e, functions=None):
    """Translate by re-reading the rendered string, so the two systems share
    nothing but the surface syntax."""
    text = render(e).replace("^", "**")
    local = dict(SYMS, ln=sp.log, exp=sp.exp, D=lambda f, *v: sp.diff(f, *v))
    for name in functions or ("f", "g", "p", "q"):
        local[name] = sp.Function(name)
    return sp.sympify(text, locals=local)


def sp_zero(e):
    return sp.simplify(e) == 0
