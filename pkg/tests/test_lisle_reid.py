from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cartan_lab import lisle_reid as lr
from cartan_lab.exterior import jacobi_check


def _structure(y0):
    return lr.structure_equations(lr.example_system(), (0, y0))


def test_example_at_unit_base_point():
    s = _structure(1)
    assert s.render_equation("w1") == "dw1 = -w1^w2"
    assert s.render_equation("w2") == "dw2 = -w1^pi1"


@given(st.fractions(min_value=-5, max_value=5, max_denominator=6).filter(lambda v: v != 0))
def test_example_coefficient_tracks_base_point(y0):
    # hand derivation: the only torsion comes from xi_x = eta/y, giving -1/y0
    s = _structure(y0)
    assert s.equation("w1") == {("w1", "w2"): -1 / y0}
    assert jacobi_check(s)["passed"]


@given(st.fractions(min_value=-4, max_value=4, max_denominator=3).filter(lambda v: v != 0))
def test_base_points_related_by_scaling(y0):
    cands = sorted({Fraction(1), y0, 1 / y0, -y0, -1 / y0, Fraction(-1)})
    lam = lr.find_diagonal_scaling(_structure(1), _structure(y0), cands)
    assert lam is not None


def test_default_base_point_avoids_singularity():
    sys = lr.example_system()
    assert lr.find_base_point(sys) == (0, 1)
    assert not lr.is_nonsingular(sys, (0, 0))
    with pytest.raises(lr.SingularPointError):
        lr.structure_equations(sys, (3, 0))


def test_translation_group_is_abelian():
    s = lr.structure_equations(lr.translation_system(3))
    assert all(not s.equation(f) for f in s.forms)


def test_line_diffeomorphisms():
    s = lr.structure_equations(lr.diffeo_line_system())
    # the parametric derivative enters as +pi1^w1
    assert s.equation("w1") == {("w1", "pi1"): -1}


def test_json_round_trip():
    sys = lr.example_system()
    again = lr.DefiningSystem.from_json(sys.to_json())
    assert again.to_json() == sys.to_json()


def test_validate_report():
    rep = lr.validate(lr.example_system())
    assert rep == {"valid": True, "parametric": 1, "warnings": []}


def test_incompatible_system_warns():
    sys = lr.DefiningSystem.from_json({
        "vars": ["x", "y"], "unknowns": ["xi", "eta"], "parametric": [],
        "principal": {"xi,x": {"A": [], "b": ["y", "0"]}, "xi,y": {"A": [], "b": ["0", "0"]},
                      "eta,x": {"A": [], "b": ["0", "0"]}, "eta,y": {"A": [], "b": ["0", "0"]}},
    })
    assert lr.validate(sys)["warnings"]


def test_partition_errors():
    base = lr.example_system().to_json()
    missing = dict(base, principal={k: v for k, v in base["principal"].items() if k != "xi,y"})
    with pytest.raises(lr.DefiningSystemError):
        lr.validate(lr.DefiningSystem.from_json(missing))
    both = dict(base, parametric=[["eta", "x"], ["xi", "x"]])
    with pytest.raises(lr.DefiningSystemError):
        lr.validate(lr.DefiningSystem.from_json(both))
    wrong_len = dict(base, principal=dict(base["principal"], **{"xi,y": {"A": ["0"], "b": ["0"]}}))
    with pytest.raises(lr.DefiningSystemError):
        lr.validate(lr.DefiningSystem.from_json(wrong_len))
    foreign = dict(base, principal=dict(base["principal"], **{"xi,y": {"A": ["z"], "b": ["0", "0"]}}))
    with pytest.raises(lr.DefiningSystemError):
        lr.validate(lr.DefiningSystem.from_json(foreign))


def test_higher_order_rejected():
    with pytest.raises(lr.HigherOrderError):
        lr.DefiningSystem.from_json(dict(lr.example_system().to_json(), order=2))
    with pytest.raises(lr.HigherOrderError):
        lr.DefiningSystem.from_json({"vars": ["x", "y"], "unknowns": ["xi", "eta"],
                                     "parametric": [["xi", "xy"]], "principal": {}})
