from fractions import Fraction

import pytest
import sympy as sp

from cartan_lab import hunter_saxton as hs
from cartan_lab import laplace as lp
from cartan_lab.expr import is_zero, parse

from strategies import SYMS, to_sympy

t, x = SYMS["t"], SYMS["x"]


def sympy_ep_residual(u, k):
    s = t + x
    rhs = sp.diff(u, t) / (k * s) + 2 * (1 - k) / (k * s) * sp.diff(u, x) - 2 * (1 - k) / (k * s) ** 2 * u
    return sp.simplify(sp.diff(u, t, x) - rhs)


def sympy_hs_residual(U, T, X, k):
    """U_TX - U U_XX - k U_X^2 through the inverse Jacobian, all in sympy."""
    J = sp.Matrix([[sp.diff(T, t), sp.diff(T, x)], [sp.diff(X, t), sp.diff(X, x)]])
    inv = J.inv()

    def d_T(f):
        return sp.diff(f, t) * inv[0, 0] + sp.diff(f, x) * inv[1, 0]

    def d_X(f):
        return sp.diff(f, t) * inv[0, 1] + sp.diff(f, x) * inv[1, 1]

    UX = d_X(U)
    return sp.simplify(d_X(d_T(U)) - U * d_X(UX) - k * UX ** 2)


@pytest.mark.parametrize("kappa,S,R", [
    (Fraction(1, 2), "t^2", "1"), (Fraction(1, 3), "t^3", "x"), (Fraction(1), "t", "x^2 + 1"),
    (Fraction(2), "0", "x"), (Fraction(-1, 2), "t^2", "1"),
])
def test_ep_solutions_satisfy_ep_in_sympy(kappa, S, R):
    u = hs.general_solution_ep(kappa, S, R)
    k = sp.Rational(kappa.numerator, kappa.denominator)
    assert sympy_ep_residual(to_sympy(u), k) == 0
    assert is_zero(hs.ep_residual(u, kappa))


@pytest.mark.parametrize("kappa,S,R", [
    (Fraction(1, 2), "t^2", "1"), (Fraction(1, 3), "t^3", "x"), (Fraction(1), "t^2", "x^2 + 1"),
])
def test_hs_solutions_satisfy_hs_in_sympy(kappa, S, R):
    U, T, X = hs.general_solution_hs(kappa, S, R)
    k = sp.Rational(kappa.numerator, kappa.denominator)
    assert sympy_hs_residual(*(to_sympy(e) for e in (U, T, X)), k) == 0
    assert is_zero(hs.hs_residual_exact(U, T, X, kappa))


def test_antiderivative_matches_sympy():
    for a in (Fraction(2), Fraction(1, 2), Fraction(-3, 2)):
        ours = to_sympy(hs.antiderivative(parse("x^2 - 3*x + 1"), a))
        xi = sp.Symbol("xi", positive=True)
        ref = sp.integrate((xi ** 2 - 3 * xi + 1) * (t + xi) ** sp.Rational(a.numerator, a.denominator),
                           (xi, 0, x))
        pt = {t: sp.Rational(3, 4), x: sp.Rational(5, 4)}
        assert abs(float(ours.subs(pt)) - float(ref.subs(pt))) < 1e-12


def test_antiderivative_refuses_logarithms():
    with pytest.raises(hs.HunterSaxtonError):
        hs.antiderivative(parse("1"), -1)


def test_linearization_symbolic_kappa():
    rep = hs.verify_linearization(None)
    assert rep.passed, rep.checks


@pytest.mark.parametrize("kappa", [Fraction(1, 2), Fraction(1, 3), Fraction(3)])
def test_cascade(kappa):
    assert hs.verify_cascade(kappa).passed


def test_cascade_symbolic():
    assert hs.verify_cascade(None).passed


def test_transformed_equation_has_vanishing_h():
    for k in (Fraction(1, 3), Fraction(2)):
        assert is_zero(lp.laplace(hs.ep_trans_equation(k)).H)
        assert not is_zero(lp.laplace(hs.ep_trans_equation(k)).K)


def test_p_plus_q_is_two():
    assert is_zero(hs.p_plus_q(None) - 2)


def test_contact_map_evaluates():
    m = hs.linearization_map(Fraction(1, 2))
    vals = m.evaluate({"t": 1.0, "x": 0.5, "u": 0.3, "u_t": 0.1, "u_x": -0.2})
    assert vals["t"] == pytest.approx(2.0)
    assert vals["u_x"] == pytest.approx(-1 / 1.5)


def test_solve_reports():
    out = hs.solve(Fraction(1, 3), "t^2", "x + 1", emit="hs")
    assert out["residual_report"]["status"] == "PASS"
    assert out["residual_report"]["numeric"]["max_relative_residual"] < 1e-6
    deg = hs.solve(Fraction(1, 2), "t^2", "0", emit="hs")
    assert deg["residual_report"]["status"] == "DEGENERATE"
    assert hs.solve(Fraction(1, 2), "t", "1")["residual_report"]["status"] == "PASS"


def test_catalog_all_pass():
    cat = hs.catalog()
    assert len(cat) == 36
    for kappa, S, R in cat:
        assert is_zero(hs.ep_residual(hs.general_solution_ep(kappa, S, R), kappa))


def test_bad_inputs():
    with pytest.raises(hs.HunterSaxtonError):
        hs.kappa_expr(0)
    with pytest.raises(hs.HunterSaxtonError):
        hs.general_solution_ep(None, "t")
    with pytest.raises(hs.HunterSaxtonError):
        hs.general_solution_ep(Fraction(1, 2), "x", "0")
    with pytest.raises(hs.HunterSaxtonError):
        hs.solve(Fraction(1, 2), emit="png")


def test_residual_detects_wrong_kappa():
    U, T, X = hs.general_solution_hs(Fraction(1, 3), "t^2", "x")
    assert not is_zero(hs.hs_residual_exact(U, T, X, Fraction(1, 2)))
    assert not is_zero(hs.ep_residual(hs.general_solution_ep(Fraction(1, 3), "t", "1"), Fraction(2)))
