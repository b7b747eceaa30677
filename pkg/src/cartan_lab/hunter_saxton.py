"""Contact map from Euler-Poisson to generalized Hunter-Saxton, the Laplace
cascade that integrates Euler-Poisson, and the resulting general solutions.

Euler-Poisson (EP):   u_tx = u_t/(k s) + 2(1-k)/(k s) u_x - 2(1-k)/(k s)^2 u,  s = t + x
Hunter-Saxton (HS):   U_TX = U U_XX + k U_X^2
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .expr import nodes as N
from .expr.calculus import SubstitutionRule, diff, substitute, total_diff
from .expr.canonical import canonicalize, is_zero
from .expr.numeric import lambdify
from .expr.parser import parse, render
from .laplace import LinearHyperbolicEquation, contact_invariants, laplace

t, x = N.var("t"), N.var("x")
s = t + x


class HunterSaxtonError(ValueError):
    pass


def kappa_expr(kappa):
    """Rational kappa, or the symbol ``k`` when kappa is None or a name."""
    if kappa is None:
        k = N.var("k")
    elif isinstance(kappa, str):
        try:
            k = N.const(Fraction(kappa))
        except ValueError:
            k = N.var(kappa)
    else:
        k = N.as_expr(kappa)
    if isinstance(k, N.Const) and k.value == 0:
        raise HunterSaxtonError("kappa = 0 is degenerate")
    return k


def spow(base, exponent):
    """base^exponent with a possibly symbolic exponent."""
    exponent = canonicalize(exponent)
    if isinstance(exponent, N.Const):
        return N.power(base, exponent.value)
    return N.general_power(base, exponent)


def ep_rhs(u, k):
    ut, ux = u.symbol.d("t"), u.symbol.d("x")
    return ut / (k * s) + 2 * (1 - k) / (k * s) * ux - 2 * (1 - k) / (k * s) ** 2 * u


def ep_equation(kappa):
    k = kappa_expr(kappa)
    params = tuple(sorted(v.name for v in N.free_vars(k)))
    return LinearHyperbolicEquation(1 / (k * s), 2 * (1 - k) / (k * s), -2 * (1 - k) / (k * s) ** 2,
                                    params=params)


def ep_trans_equation(kappa):
    """The equation for v = u_x - u/(k s); its H vanishes."""
    k = kappa_expr(kappa)
    params = tuple(sorted(v.name for v in N.free_vars(k)))
    return LinearHyperbolicEquation((1 - 2 * k) / (k * s), 2 * (1 - k) / (k * s),
                                    -(2 * k - 1) * (k - 2) / (k * s) ** 2, params=params)


@dataclass
class ContactMap:
    kappa: N.Expr
    u: N.Expr
    t: N.Expr
    x: N.Expr
    u_t: N.Expr
    u_x: N.Expr
    contact_residuals: tuple = ()

    def evaluate(self, point):
        """Image of a point given as a mapping or as (t, x, u, u_t, u_x)."""
        keys = ("t", "x", "u", "u_t", "u_x")
        vals = [point[k] for k in keys] if isinstance(point, dict) else list(point)
        f = lambdify([getattr(self, k) for k in keys], [N.var(k) for k in keys])
        return dict(zip(keys, f(*vals)))

    def to_json(self):
        return {"kappa": render(self.kappa),
                **{k: render(getattr(self, k)) for k in ("u", "t", "x", "u_t", "u_x")}}


def linearization_map(kappa) -> ContactMap:
    """The map on (t, x, u, u_t, u_x) taking EP to HS.

    The contact condition dU - U_T dT - U_X dX = 0 modulo du - u_t dt - u_x dx
    is checked on construction with u, u_t, u_x as independent coordinates.
    """
    k = kappa_expr(kappa)
    u, ut, ux = N.var("u"), N.var("u_t"), N.var("u_x")
    E = spow(s, -1 / k)
    m = ContactMap(
        kappa=k,
        u=canonicalize(E * (k * s * ux + (k - 1) * u)),
        t=canonicalize(t / k),
        x=canonicalize(-s * E * (k * s * ux - u)),
        u_t=canonicalize(k ** 2 * E * (ut - ux)),
        u_x=canonicalize(-1 / s),
    )
    # pull back along dt, dx, du_x; du = u_t dt + u_x dx, while du_t only
    # appears if some image depends on u_t, which only U_T does
    res = []
    for base, du_coef in ((t, ut), (x, ux)):
        def D(f):
            return diff(f, base) + diff(f, u) * du_coef
        res.append(canonicalize(D(m.u) - m.u_t * D(m.t) - m.u_x * D(m.x)))
    res.append(canonicalize(diff(m.u, ux) - m.u_t * diff(m.t, ux) - m.u_x * diff(m.x, ux)))
    res.append(canonicalize(diff(m.u, ut) - m.u_t * diff(m.t, ut) - m.u_x * diff(m.x, ut)))
    m.contact_residuals = tuple(res)
    bad = [r for r in res if not is_zero(r)]
    if bad:
        raise HunterSaxtonError("contact condition fails: %s" % render(bad[0]))
    return m


@dataclass
class Report:
    name: str
    checks: dict

    @property
    def passed(self):
        return all(c["residual"] == "0" for c in self.checks.values())

    def to_json(self):
        return {"name": self.name, "status": "PASS" if self.passed else "FAIL", "checks": self.checks}


def _check(expr):
    e = canonicalize(expr)
    return {"residual": render(e)}


def _on_solutions(kappa):
    k = kappa_expr(kappa)
    u = N.function("u", ("t", "x"))()
    rule = SubstitutionRule(u.symbol.d("t", "x"), ep_rhs(u, k), closure=True)
    return k, u, [rule]


def verify_linearization(kappa=None) -> Report:
    """Check the map sends solutions of EP to solutions of HS.

    u is an undetermined function constrained by u_tx = EP right-hand side;
    the images are functions of (t, x) and tilded derivatives come from the
    chain rule.
    """
    k, u, rules = _on_solutions(kappa)
    m = linearization_map(k)
    jet = {N.var("u"): u, N.var("u_t"): u.symbol.d("t"), N.var("u_x"): u.symbol.d("x")}
    U, T, X, UT, UX = (substitute(e, jet) for e in (m.u, m.t, m.x, m.u_t, m.u_x))

    def Dt(f):
        return total_diff(f, t, rules)

    def Dx(f):
        return total_diff(f, x, rules)

    Xt, Xx = Dt(X), Dx(X)
    Tt = Dt(T)

    def d_X(f):
        return canonicalize(Dx(f) / Xx)

    def d_T(f):
        return canonicalize((Dt(f) - d_X(f) * Xt) / Tt)

    checks = {
        "contact_t": _check(Dt(U) - UT * Tt - UX * Xt),
        "contact_x": _check(Dx(U) - UX * Xx),
        "mixed_partials": _check(d_X(UT) - d_T(UX)),
    }
    UXX = d_X(UX)
    checks["hs_residual"] = _check(d_X(UT) - U * UXX - k * UX ** 2)
    return Report("linearization kappa=%s" % render(k), checks)


def verify_cascade(kappa=None) -> Report:
    k = kappa_expr(kappa)
    u = N.function("u", ("t", "x"))()
    v = N.function("v", ("t", "x"))()
    ux, utx = u.symbol.d("x"), u.symbol.d("t", "x")
    checks = {}

    # (a) v from B1 into B2 gives EP
    v_b1 = ux - u / (k * s)
    b2 = diff(v_b1, t) - 2 * (1 - k) / (k * s) * v_b1 - u / (k * s ** 2)
    checks["a_B1_into_B2_is_EP"] = _check(b2 - (utx - ep_rhs(u, k)))

    # (b) u from B2 into B1 gives the v-equation
    vt, vx, vtx = v.symbol.d("t"), v.symbol.d("x"), v.symbol.d("t", "x")
    u_b2 = k * s ** 2 * (vt - 2 * (1 - k) / (k * s) * v)
    b1 = diff(u_b2, x) - u_b2 / (k * s) - v
    tr = ep_trans_equation(k)
    rhs_trans = tr.T * vt + tr.X * vx + tr.U * v
    checks["b_B2_into_B1_is_EP_trans"] = _check(b1 / (k * s ** 2) - (vtx - rhs_trans))

    # (c) B3 on solutions of the v-equation gives B4
    rules = [SubstitutionRule(vtx, rhs_trans, closure=True)]
    w = vx + (2 * k - 1) / (k * s) * v
    checks["c_B3_gives_B4"] = _check(total_diff(w, t, rules) + 2 * (k - 1) / (k * s) * w)

    # (d) the v-equation has H = 0, via the classifier
    checks["d_H_of_EP_trans"] = _check(laplace(tr).H)
    return Report("cascade kappa=%s" % render(k), checks)


def p_plus_q(kappa=None):
    ci = contact_invariants(ep_equation(kappa))
    return canonicalize(ci.P + ci.Q)


# -- general solutions -----------------------------------------------------

def _poly_coeffs(R, var):
    """Taylor coefficients of a polynomial R in ``var`` about 0."""
    out = []
    cur = canonicalize(R)
    n = 0
    while not is_zero(cur):
        out.append(substitute(cur, {var: 0}) * Fraction(1, math.factorial(n)))
        cur = diff(cur, var)
        n += 1
        if n > 64:
            raise HunterSaxtonError("R must be a polynomial in x")
    return [canonicalize(c) for c in out]


def antiderivative(R, a):
    """int_0^x R(xi) (t + xi)^a d xi for polynomial R(x) and rational a.

    Expanding R(y - t) in y = t + x reduces each term to a power of y;
    an exponent of -1 would need a logarithm and is rejected.
    """
    a = Fraction(a)
    R = canonicalize(R)
    if {v.name for v in N.free_vars(R)} - {"x"} or N.free_functions(R):
        raise HunterSaxtonError("R must be a polynomial in x alone for closed-form integration")
    r = _poly_coeffs(R, x)
    y = N.var("_y")
    total = N.ZERO
    for m, rm in enumerate(r):
        for j in range(m + 1):
            e = a + j + 1
            if e == 0:
                raise HunterSaxtonError("antiderivative needs a logarithm (exponent -1)")
            c = rm * math.comb(m, j) * (-t) ** (m - j)
            total = total + c * N.power(y, e) / e
    G = canonicalize(total)
    return canonicalize(substitute(G, {y: s}) - substitute(G, {y: t}))


def _concrete(kappa, S, R):
    k = kappa_expr(kappa)
    if not isinstance(k, N.Const):
        raise HunterSaxtonError("closed-form solutions need a rational kappa")
    S = parse(S) if isinstance(S, str) else N.as_expr(S)
    R = parse(R) if isinstance(R, str) else N.as_expr(R)
    if {v.name for v in N.free_vars(S)} - {"t"} or N.free_functions(S):
        raise HunterSaxtonError("S must be an explicit function of t")
    kv = k.value
    I1 = antiderivative(R, 1 / kv)
    I2 = antiderivative(R, (1 - kv) / kv)
    return kv, canonicalize(S), I1, I2


def general_solution_ep(kappa, S="0", R="0"):
    """u = s^(1/k)(k S' + I2) - s^((1-k)/k)(S + I1), s = t + x."""
    kv, S, I1, I2 = _concrete(kappa, S, R)
    u = N.power(s, 1 / kv) * (kv * diff(S, t) + I2) - N.power(s, (1 - kv) / kv) * (S + I1)
    return canonicalize(u)


def ep_residual(u, kappa):
    k = kappa_expr(kappa)
    u = N.as_expr(u)
    rhs = diff(u, t) / (k * s) + 2 * (1 - k) / (k * s) * diff(u, x) - 2 * (1 - k) / (k * s) ** 2 * u
    return canonicalize(diff(u, t, x) - rhs)


def general_solution_hs(kappa, S="0", R="0"):
    """Parametric solution (U, T, X) of HS as functions of (t, x)."""
    kv, S, I1, I2 = _concrete(kappa, S, R)
    U = canonicalize(kv ** 2 * diff(S, t) + kv * I2)
    T = canonicalize(t / kv)
    X = canonicalize(-kv * (S + I1))
    return U, T, X


def hs_residual_exact(U, T, X, kappa):
    """HS residual of the parametric triple via the chain rule, or None if degenerate."""
    k = kappa_expr(kappa)
    det = canonicalize(diff(T, t) * diff(X, x) - diff(T, x) * diff(X, t))
    if is_zero(det):
        return None
    Tt, Tx, Xt, Xx = diff(T, t), diff(T, x), diff(X, t), diff(X, x)

    def d_T(f):
        return canonicalize((diff(f, t) * Xx - diff(f, x) * Xt) / det)

    def d_X(f):
        return canonicalize((diff(f, x) * Tt - diff(f, t) * Tx) / det)

    UX = d_X(U)
    return canonicalize(d_X(d_T(U)) - U * d_X(UX) - k * UX ** 2)


def hs_residual_numeric(U, T, X, kappa, grid=10, domain=(0.5, 2.0, 0.5, 2.0), h=1e-3, seed=0):
    """Finite-difference HS residual on a grid, with U re-expressed in (T, X).

    T = t/k is inverted directly; X(t, x) = X0 is solved for x by Newton's
    method starting from the nearest grid value.
    """
    kv = float(kappa_expr(kappa).value)
    fU, fX = lambdify([U], [t, x]), lambdify([X, diff(X, x)], [t, x])

    def u_at(Tq, Xq, x_guess):
        tq = kv * Tq
        xq = x_guess
        for _ in range(60):
            val, dval = fX(tq, xq)
            if dval == 0:
                raise HunterSaxtonError("parametrization degenerate: dX/dx vanishes")
            step = (val - Xq) / dval
            xq -= step
            if abs(step) <= 1e-15 * (1 + abs(xq)):
                break
        return fU(tq, xq)[0], xq

    worst = 0.0
    points = 0
    for i in range(grid):
        for j in range(grid):
            t0 = domain[0] + (domain[1] - domain[0]) * (i + 0.5) / grid
            x0 = domain[2] + (domain[3] - domain[2]) * (j + 0.5) / grid
            T0 = t0 / kv
            X0, dX = fX(t0, x0)
            if abs(dX) < 1e-8:
                raise HunterSaxtonError("parametrization degenerate: dX/dx vanishes at (%g, %g)" % (t0, x0))
            u0, uX, uXX, uTX = _richardson(u_at, T0, X0, x0, h * max(1.0, abs(T0)), h * max(1.0, abs(X0)))
            res = uTX - u0 * uXX - kv * uX ** 2
            scale = 1 + abs(uTX) + abs(u0 * uXX) + abs(kv * uX ** 2)
            worst = max(worst, abs(res) / scale)
            points += 1
    return {"max_relative_residual": worst, "points": points, "step": h}


def _stencil(u_at, T0, X0, x0, hT, hX):
    vals = {}
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            if a and not b:
                continue
            vals[a, b] = u_at(T0 + a * hT, X0 + b * hX, x0)[0]
    u0 = vals[0, 0]
    uX = (vals[0, 1] - vals[0, -1]) / (2 * hX)
    uXX = (vals[0, 1] - 2 * u0 + vals[0, -1]) / hX ** 2
    uTX = (vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / (4 * hT * hX)
    return u0, uX, uXX, uTX


def _richardson(u_at, T0, X0, x0, hT, hX):
    """Central differences at steps h and h/2 combined to fourth order."""
    coarse = _stencil(u_at, T0, X0, x0, hT, hX)
    fine = _stencil(u_at, T0, X0, x0, hT / 2, hX / 2)
    return tuple((4 * f - c) / 3 for f, c in zip(fine, coarse))


def solve(kappa, S="0", R="0", emit="ep", grid=10, tol=1e-6):
    """Closed-form solution plus its residual report."""
    if emit == "ep":
        u = general_solution_ep(kappa, S, R)
        res = ep_residual(u, kappa)
        return {"solution": {"u": render(u)},
                "residual_report": {"exact_residual": render(res),
                                    "status": "PASS" if is_zero(res) else "FAIL"}}
    if emit != "hs":
        raise HunterSaxtonError("emit must be 'ep' or 'hs'")
    U, T, X = general_solution_hs(kappa, S, R)
    out = {"solution": {"u": render(U), "t": render(T), "x": render(X)}}
    exact = hs_residual_exact(U, T, X, kappa)
    if exact is None:
        out["residual_report"] = {"status": "DEGENERATE",
                                  "reason": "Jacobian of (t, x) -> (T, X) vanishes identically; "
                                            "the parametrization covers a curve only"}
        return out
    num = hs_residual_numeric(U, T, X, kappa, grid=grid)
    ok = is_zero(exact) and num["max_relative_residual"] < tol
    out["residual_report"] = {"exact_residual": render(exact), "numeric": num,
                              "status": "PASS" if ok else "FAIL"}
    return out


CATALOG_KAPPA = (Fraction(1, 2), Fraction(1, 3), Fraction(1))
CATALOG_S = ("0", "t", "t^2", "t^3")
CATALOG_R = ("0", "1", "x")


def catalog():
    return [(k, S, R) for k in CATALOG_KAPPA for S in CATALOG_S for R in CATALOG_R]
