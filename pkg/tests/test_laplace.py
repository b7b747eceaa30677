from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import assume, given, strategies as st

from cartan_lab import laplace as lp
from cartan_lab.equivalence import shift_t
from cartan_lab.expr import is_zero, parse, substitute
from cartan_lab.expr import nodes as N
from cartan_lab.laplace import swap_tx

from strategies import SYMS, polys, to_sympy

t, x = N.symbols("t x")
st_, sx = SYMS["t"], SYMS["x"]


def oracle_hk(T, X, U):
    """Laplace invariants from the two factorizations of the operator
    L = D_t D_x - T D_t - X D_x - U, computed in sympy."""
    u = sp.Function("u")(st_, sx)
    L = sp.diff(u, st_, sx) - T * sp.diff(u, st_) - X * sp.diff(u, sx) - U * u
    f1 = sp.diff(sp.diff(u, sx) - T * u, st_) - X * (sp.diff(u, sx) - T * u)
    f2 = sp.diff(sp.diff(u, st_) - X * u, sx) - T * (sp.diff(u, st_) - X * u)
    H = sp.simplify((f1 - L) / u)
    K = sp.simplify((f2 - L) / u)
    return H, K


def ep_sympy(k):
    s = st_ + sx
    return 1 / (k * s), 2 * (1 - k) / (k * s), -2 * (1 - k) / (k * s) ** 2


def _same(ours, ref):
    return sp.simplify(to_sympy(ours) - ref) == 0


@pytest.mark.parametrize("k", [Fraction(1, 2), Fraction(2), Fraction(-3, 4), Fraction(5)])
def test_euler_poisson_invariants_match_oracle(k):
    eq = lp.euler_poisson(k)
    T, X, U = ep_sympy(sp.Rational(k.numerator, k.denominator))
    assert _same(eq.T, T) and _same(eq.X, X) and _same(eq.U, U)
    H, K = oracle_hk(T, X, U)
    pair = lp.laplace(eq)
    assert _same(pair.H, H) and _same(pair.K, K)
    P = sp.simplify(K / H)
    Q = sp.simplify(sp.diff(sp.log(H), st_, sx) / H)
    ci = lp.contact_invariants(eq)
    assert _same(ci.P, P) and _same(ci.Q, Q)


def test_euler_poisson_closed_forms():
    kk = SYMS["k"]
    eq = lp.LinearHyperbolicEquation(*(parse(str(e).replace("**", "^")) for e in ep_sympy(kk)),
                                     params=("k",))
    sub = lp.classify(eq)
    assert sub.tag == "C6"
    s = st_ + sx
    assert _same(sub.H, 1 / (kk * s ** 2))
    assert _same(sub.K, 2 * (1 - kk) / (kk * s ** 2))
    assert _same(sub.P, 2 - 2 * kk)
    assert _same(sub.Q, 2 * kk)


@given(polys(max_leaves=5), polys(max_leaves=5), polys(max_leaves=5))
def test_laplace_matches_oracle_on_polynomials(T, X, U):
    H, K = oracle_hk(to_sympy(T), to_sympy(X), to_sympy(U))
    pair = lp.laplace(lp.LinearHyperbolicEquation(T, X, U))
    assert sp.expand(to_sympy(pair.H) - H) == 0
    assert sp.expand(to_sympy(pair.K) - K) == 0


# -- symmetries of the invariants ---------------------------------------------------

@given(polys(max_leaves=4), polys(max_leaves=4), polys(max_leaves=4), polys(max_leaves=4))
def test_gauge_invariance(T, X, U, g):
    eq = lp.LinearHyperbolicEquation(T, X, U)
    a, b = lp.laplace(eq), lp.laplace(eq.gauge(N.exp(g)))
    assert is_zero(a.H - b.H) and is_zero(a.K - b.K)


@given(polys(max_leaves=4), polys(max_leaves=4), polys(max_leaves=4))
def test_swap_exchanges_h_and_k(T, X, U):
    eq = lp.LinearHyperbolicEquation(T, X, U)
    a, b = lp.laplace(eq), lp.laplace(eq.swap())
    assert is_zero(b.H - swap_tx(a.K)) and is_zero(b.K - swap_tx(a.H))
    assume(not is_zero(a.H) and not is_zero(a.K))
    pa, pb = lp.contact_invariants(eq), lp.contact_invariants(eq.swap())
    assert is_zero(pb.P * swap_tx(pa.P) - 1)


def test_gauge_with_undetermined_function():
    eq = lp.counter_example()
    g = eq.gauge(parse("exp(f(t, x))"))
    assert is_zero(lp.laplace(g).H - lp.laplace(eq).H)


# -- classification ---------------------------------------------------------------

C3 = lp.LinearHyperbolicEquation(parse("-2*(x - 1)/(t + x)"), N.ZERO, parse("2*x/(t + x)^2"))
C4 = lp.counter_example(p="1", q="t")

CORPUS = [
    (lp.wave(), "C1"),
    (lp.euler_poisson(Fraction(1, 2)), "C6"),
    (lp.euler_poisson(3), "C6"),
    (lp.counter_example(), "C2"),
    (lp.counter_example(p="t", q="1+t"), "C2"),
    (C3, "C3"),
    (C4, "C4"),
    (C4.swap(), "C5"),
    (lp.LinearHyperbolicEquation(N.ZERO, N.ZERO, parse("-1")), "C6"),
]


@pytest.mark.parametrize("eq,tag", CORPUS)
def test_classification_corpus(eq, tag):
    assert lp.classify(eq).tag == tag


@pytest.mark.parametrize("eq,tag", CORPUS)
def test_classification_is_gauge_invariant(eq, tag):
    assert lp.classify(eq.gauge(parse("exp(t*x) + 1"))).tag == tag


def test_h_degenerate_is_rejected():
    eq = lp.LinearHyperbolicEquation(N.ZERO, parse("1/(t + x)"), N.ZERO)
    assert is_zero(lp.laplace(eq).H) and not is_zero(lp.laplace(eq).K)
    with pytest.raises(lp.HDegenerateError):
        lp.classify(eq)
    assert lp.classify(eq.swap()).tag == "C6"


def test_declared_facts_feed_the_witness():
    eq = lp.LinearHyperbolicEquation.parse("0", "p(t)", "q(t)", facts=["nonzero: q(t)"])
    sub = lp.classify(eq)
    assert sub.witness[0]["basis"] == "declared"
    zeroed = lp.LinearHyperbolicEquation.parse("0", "p(t)", "q(t)", facts=["zero: q(t)"])
    assert lp.classify(zeroed).tag == "C1"


def test_bad_facts():
    with pytest.raises(ValueError):
        lp.LinearHyperbolicEquation.parse("0", "p(t)", "0", facts=["positive: p(t)"])
    with pytest.raises(ValueError):
        lp.LinearHyperbolicEquation.parse("z", "0", "0")


def test_json_round_trip():
    eq = lp.counter_example()
    assert lp.LinearHyperbolicEquation.from_json(eq.to_json()) == eq


# -- invariant frames ---------------------------------------------------------------

FRAMED = [lp.counter_example(p="t", q="1+t"), C3, C4, C4.swap()]


@pytest.mark.parametrize("eq", FRAMED)
def test_frame_invariants_are_gauge_invariant(eq):
    a = lp.invariant_frame(eq).derivatives(1)
    b = lp.invariant_frame(eq.gauge(parse("1 + t^2*x"))).derivatives(1)
    assert a.keys() == b.keys()
    assert all(is_zero(a[k] - b[k]) for k in a)


@given(st.fractions(min_value=Fraction(-1, 4), max_value=Fraction(1, 4), max_denominator=8))
def test_frame_invariants_transport_under_shift(c):
    eq = lp.counter_example(p="t", q="1+t")
    inv = lp.invariant_frame(eq).derivatives(1)
    moved = lp.invariant_frame(shift_t(eq, c)).derivatives(1)
    for k, v in inv.items():
        assert is_zero(moved[k] - substitute(v, {t: t + c}, simultaneous=True))


def test_frame_rejects_wrong_subclass():
    with pytest.raises(lp.FrameError):
        lp.invariant_frame(lp.euler_poisson(2))
    with pytest.raises(lp.FrameError):
        lp.invariant_frame(C3, "C2")


@pytest.mark.parametrize("k", [Fraction(1, 2), Fraction(3)])
def test_canonical_form_preserves_p_and_q(k):
    eq = lp.euler_poisson(k)
    a, b = lp.classify(eq), lp.classify(lp.canonical_form(eq))
    assert b.tag == "C6" and a.P == b.P and a.Q == b.Q


def test_alternative_invariants_report_degenerate_bases():
    alt = lp.alternative_invariants(C3)
    assert alt.values["J"] is None
    assert any("P_t vanishes" in d for d in alt.degenerate)
    gen = lp.alternative_invariants(lp.counter_example(p="t", q="1+t"))
    assert gen.independence["rank_with_J"] >= gen.independence["rank_without_J"]
