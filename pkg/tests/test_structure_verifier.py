import json
import shutil

import pytest

from cartan_lab import verifier as vf
from cartan_lab.exterior import AbstractStructure, jacobi_check

DATASETS = ["liouville_cartan", "liouville_moving_coframe", "euler_poisson", "hunter_saxton",
            "cont_j2_n2", "lisle_reid_liouville"]


def test_dataset_listing():
    assert vf.dataset_names() == sorted(DATASETS)


@pytest.mark.parametrize("name", DATASETS)
def test_dataset_passes(name):
    rep = vf.verify_dataset(name)
    assert rep["passed"], json.dumps(rep)[:500]


def _tamper(tmp_path, monkeypatch, name, edit):
    for p in vf.dataset_dir().glob("*.json"):
        shutil.copy(p, tmp_path / p.name)
    path = tmp_path / (name + ".json")
    data = json.loads(path.read_text())
    edit(data)
    path.write_text(json.dumps(data))
    monkeypatch.setenv(vf.DATASET_ENV, str(tmp_path))
    return vf.verify_dataset(name)


def test_wrong_claim_coefficient_fails(tmp_path, monkeypatch):
    def edit(d):
        d["claims"][0]["terms"][1][0] = "2"
    assert not _tamper(tmp_path, monkeypatch, "euler_poisson", edit)["passed"]


def test_wrong_form_fails(tmp_path, monkeypatch):
    def edit(d):
        d["forms"][1]["terms"][-1][0] = "2*(k - 1)/(k*b*S) + 1"
    assert not _tamper(tmp_path, monkeypatch, "euler_poisson", edit)["passed"]


def test_wrong_substitution_fails(tmp_path, monkeypatch):
    def edit(d):
        d["maps"]["diffeo_product"]["map"]["phi2"] = {"w4": 1}
    rep = _tamper(tmp_path, monkeypatch, "lisle_reid_liouville", edit)
    assert not rep["substitutions"]["diffeo_product"]["passed"]


def test_missing_dataset():
    with pytest.raises(vf.DatasetError):
        vf.load_dataset("no_such_dataset")


@pytest.mark.parametrize("n", range(1, 9))
def test_diffeo_series_is_consistent(n):
    assert jacobi_check(vf.diffeo_r_series(n))["passed"]


def test_series_coefficients():
    # d(phi_j) picks up binomial(j, p) phi_{p+1}^phi_q with p + q = j
    assert vf.series_coefficient(4, 2, 2) == 6
    assert vf.series_coefficient(3, 0, 3) == 1
    assert vf.series_coefficient(3, 3, 0) == 0


@pytest.mark.parametrize("n", range(2, 7))
def test_liouville_product(n):
    assert vf.liouville_product_check(n)["passed"]


def test_substitution_both_directions():
    s = AbstractStructure(["a", "b"])
    s.set_equation("a", {("a", "b"): 1})
    t = AbstractStructure(["c", "d"])
    t.set_equation("c", {("c", "d"): 2})
    assert vf.verify_substitution(s, {"a": {"c": 1}, "b": {"d": 2}}, t)["passed"]
    assert not vf.verify_substitution(s, {"a": {"c": 1}, "b": {"d": 1}}, t)["passed"]
    with pytest.raises(vf.NonInvertibleMapError):
        vf.verify_substitution(s, {"a": {"c": 1}, "b": {"c": 2}}, t)


def test_hs_coframe():
    assert vf.verify_hs_coframe()["passed"]
