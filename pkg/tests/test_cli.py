import json
import subprocess
import sys
from fractions import Fraction

import pytest

from qslie import cli, hoffman
from qslie.freealg import Poly, parse_word


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_alg_qshuffle_text(capsys):
    code, out, _ = run(capsys, "alg", "qshuffle", "1", "2")
    assert code == 0
    assert out.splitlines() == ["1*[1,2]", "1*1.2", "1*2.1"]


def test_alg_json_uses_exact_rationals(capsys):
    code, out, _ = run(capsys, "alg", "logstar", "1.2", "--json")
    assert code == 0
    assert json.loads(out) == {"[1,2]": "-1/2", "1.2": "1/2", "2.1": "-1/2"}


def test_alg_logstar_empty_word(capsys):
    code, out, _ = run(capsys, "alg", "logstar", "e")
    assert code == 0 and out == ""


def test_alg_coproducts(capsys):
    code, out, _ = run(capsys, "alg", "decon", "1.2")
    assert out.splitlines() == ["1*e (x) 1.2", "1*1 (x) 2", "1*1.2 (x) e"]
    code, out, _ = run(capsys, "alg", "dequasi", "[1,2]", "--json")
    assert json.loads(out)["1 (x) 2"] == "1/1"


def test_alg_hlog_continuous(capsys):
    code, out, _ = run(capsys, "alg", "hlog", "1.1", "--mode", "continuous")
    assert out.splitlines() == ["-1/2*[1,1]", "1*1.1"]


@pytest.mark.parametrize("argv", [
    ["alg", "hexp", "1..2"],
    ["alg", "hexp", "[1,2]", "--mode", "continuous"],
    ["alg", "qshuffle", "1"],
    ["alg", "hexp", "1", "2"],
    ["series", "check", "only-one.json"],
    ["series", "ito", "--d", "0"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_parse_error_reports_position(capsys):
    _, _, err = run(capsys, "alg", "hexp", "1.[2")
    assert "position 4" in err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["alg", "nosuchop", "1"])
    assert exc.value.code == 2


def test_series_weight_one(capsys):
    code, out, _ = run(capsys, "series", "stratonovich", "--d", "1", "--weight", "1")
    data = json.loads(out)
    assert data["terms"] == [{"word": "1", "integral": {"1": "1/1"}, "bracket": [{"lword": "1", "coeff": "1/1"}]}]


def test_series_files_round_trip_and_check(tmp_path, capsys):
    a, b, c = (str(tmp_path / f"{x}.json") for x in "abc")
    assert run(capsys, "series", "ito", "--d", "2", "--weight", "3", "--form", "expanded", "--out", a)[0] == 0
    assert run(capsys, "series", "ito", "--d", "2", "--weight", "3", "--form", "resummed", "--out", b)[0] == 0
    assert run(capsys, "series", "stratonovich", "--d", "2", "--weight", "2", "--out", c)[0] == 0
    code, out, _ = run(capsys, "series", "check", a, b)
    assert code == 0 and out.startswith("MATCH")
    code, out, _ = run(capsys, "series", "check", a, c)
    assert code == 1 and out.startswith("MISMATCH")


def test_series_output_is_byte_stable(capsys):
    first = run(capsys, "series", "ito", "--d", "2", "--weight", "2", "--form", "resummed")[1]
    second = run(capsys, "series", "ito", "--d", "2", "--weight", "2", "--form", "resummed")[1]
    assert first == second


def test_verify_coeffs_counts(capsys):
    code, out, _ = run(capsys, "verify", "coeffs", "--max-p", "3")
    assert code == 0
    assert "surjections checked: 13+3+1" in out
    assert out.strip().endswith("coeffs: PASS")


def test_verify_coincidence(capsys):
    code, out, _ = run(capsys, "verify", "coincidence", "--d", "2", "--max-weight", "3")
    assert code == 0 and "FAIL" not in out


def test_verify_algebra_catches_corrupted_coefficient(capsys, monkeypatch):
    real = hoffman.hoffman_exp
    target = parse_word("1.2")

    def corrupted(w, mode):
        p = real(w, mode)
        if w == target:
            p = p + Poly({parse_word("[1,2]"): Fraction(1, 7)})
        return p

    monkeypatch.setattr(hoffman, "hoffman_exp", corrupted)
    code, out, _ = run(capsys, "verify", "algebra", "--max-weight", "2")
    assert code == 1
    fails = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert fails and any("1.2" in line for line in fails)


def test_verify_algebra_passes(capsys):
    code, out, _ = run(capsys, "verify", "algebra", "--max-weight", "3")
    assert code == 0


def _config(tmp_path, **overrides):
    cfg = {
        "study": "invariant",
        "d": 2,
        "matrices": [[[0, 0, 0], [0, 0, -1], [0, 1, 0]], [[0, 0, 1], [0, 0, 0], [-1, 0, 0]]],
        "y0": [1, 2, 3],
        "paths": 8,
        "step_exponents": [2, 3],
        "refinement": 4,
    }
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_num_invariant(tmp_path, capsys):
    out_path = str(tmp_path / "res.json")
    code, _, _ = run(capsys, "num", _config(tmp_path), "--out", out_path)
    assert code == 0
    res = json.loads(open(out_path).read())
    assert res["max_deviation"] < 1e-11


def test_num_strong_error_flags(tmp_path, capsys):
    code, out, _ = run(capsys, "num", _config(tmp_path, study="strong_error", flavor="ito"))
    res = json.loads(out)
    assert code == 0 and len(res["errors"]) == 2 and res["flags"]


@pytest.mark.parametrize("overrides,field", [
    ({"matrices": [[[0, 0, 0], [0, 0, -1], [0, 1]], [[0, 0, 1], [0, 0, 0], [-1, 0, 0]]]}, "matrices[0][2]"),
    ({"d": 3}, "matrices"),
    ({"y0": [1, 2]}, "matrices[0]"),
    ({"paths": 0}, "paths"),
    ({"refinement": 6}, "refinement"),
    ({"flavor": "other"}, "flavor"),
    ({"extra": 1}, "<root>"),
])
def test_num_config_errors_name_the_field(tmp_path, capsys, overrides, field):
    code, _, err = run(capsys, "num", _config(tmp_path, **overrides))
    assert code == 2
    assert f"config error: {field}:" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qslie", "alg", "shuffle", "1", "2"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines() == ["1*1.2", "1*2.1"]
