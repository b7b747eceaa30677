import json
from pathlib import Path

import pytest

from cartan_lab.cli import main

EX = Path(__file__).resolve().parent.parent / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    data = json.loads(out.out)
    assert data["schema"] == "cartan-lab/1"
    return code, data


def test_classify_counter_example(capsys):
    code, data = run_json(capsys, "classify", "--eq", EX / "counter_example.json")
    assert code == 0 and data["subclass"] == "C2"
    assert set(data["frame"]["invariants"]) == {"P", "Q", "J"}


def test_classify_c6_and_text_output(capsys):
    code, out = run(capsys, "classify", "--eq", EX / "euler_poisson_two.json", "--output", "text")
    assert code == 0 and "subclass: C6" in out.out


def test_json_is_sorted_and_stable(capsys):
    _, a = run(capsys, "classify", "--eq", EX / "wave.json")
    _, b = run(capsys, "classify", "--eq", EX / "wave.json")
    assert a.out == b.out
    keys = list(json.loads(a.out))
    assert keys == sorted(keys)


def test_equiv_exit_codes(capsys):
    a, b = EX / "euler_poisson_half.json", EX / "euler_poisson_two.json"
    code, data = run_json(capsys, "equiv", "--a", a, "--b", b)
    assert code == 0 and data["verdict"] == "Inequivalent"
    code, _ = run_json(capsys, "equiv", "--a", a, "--b", b, "--expect", "equivalent")
    assert code == 1
    code, _ = run_json(capsys, "equiv", "--a", a, "--b", b, "--expect", "inequivalent")
    assert code == 0


def test_equiv_shifted(capsys):
    code, data = run_json(capsys, "equiv", "--a", EX / "counter_example_t_1pt.json",
                          "--b", EX / "counter_example_t_1pt_shifted.json",
                          "--domain-b", "0.2,1.7,0.5,2.0", "--seed", 7)
    assert code == 0 and data["verdict"] == "Equivalent"


def test_h_degenerate_exit(capsys, tmp_path):
    f = tmp_path / "eq.json"
    f.write_text(json.dumps({"T": "0", "X": "1/(t + x)", "U": "0"}))
    code, data = run_json(capsys, "classify", "--eq", f)
    assert code == 1 and data["error"] == "H-degenerate"


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["classify"],
    ["classify", "--eq", "does/not/exist.json"],
    ["equiv", "--a", "x", "--b", "y", "--tol", "-1"],
    ["equiv", "--a", "x", "--b", "y", "--domain", "1,0,0,1"],
    ["hs", "solve"],
])
def test_usage_errors(capsys, argv):
    code, _ = run(capsys, *argv)
    assert code == 2


def test_malformed_equation(capsys, tmp_path):
    f = tmp_path / "eq.json"
    f.write_text('{"T": "t +", "X": "0", "U": "0"}')
    code, out = run(capsys, "classify", "--eq", f)
    assert code == 2 and "error" in out.err
    f.write_text("not json")
    assert run(capsys, "classify", "--eq", f)[0] == 2


def test_lisle_reid(capsys):
    code, data = run_json(capsys, "lisle-reid", "--system", EX / "defining_system.json", "--base-point", "0,2")
    assert code == 0 and data["equations"][0] == "dw1 = -1/2*w1^w2"
    code, data = run_json(capsys, "lisle-reid", "--example", "--base-point", "0,0")
    assert code == 1 and data["error"] == "singular base point"


def test_verify_structure(capsys):
    code, data = run_json(capsys, "verify-structure")
    assert code == 0 and "euler_poisson" in data["datasets"]
    code, data = run_json(capsys, "verify-structure", "--dataset", "euler_poisson")
    assert code == 0 and data["passed"]
    code, data = run_json(capsys, "verify-structure", "--dataset", "series:diffeo:5")
    assert code == 0 and data["passed"]
    assert run(capsys, "verify-structure", "--dataset", "nope")[0] == 2


def test_hs_commands(capsys):
    code, data = run_json(capsys, "hs", "verify-linearization", "--kappa", "1/2")
    assert code == 0 and data["status"] == "PASS"
    code, data = run_json(capsys, "hs", "cascade")
    assert code == 0
    code, data = run_json(capsys, "hs", "solve", "--kappa", "1/3", "--S", "t^2", "--R", "x", "--emit", "hs")
    assert code == 0 and data["residual_report"]["status"] == "PASS"
    code, data = run_json(capsys, "hs", "solve", "--kappa", "1/2", "--S", "t^2", "--R", "0", "--emit", "hs")
    assert code == 1 and data["residual_report"]["status"] == "DEGENERATE"
    assert run(capsys, "hs", "cascade", "--kappa", "0")[0] == 2


def test_selftest_subset(capsys):
    code, data = run_json(capsys, "selftest", "--only", "4", "--only", "7")
    assert code == 0 and [c["id"] for c in data["criteria"]] == [4, 7]
