import json

import pytest
from fixtures import path_csv, six_point_csv, seven_point_json

import ultragap.main
from ultragap.main import ExitCode


def run(capsys, argv):
    code = ultragap.main.main(argv + ["-q"])
    return code, capsys.readouterr().out


def test_main_help():
    for help_str in ("-h", "--help"):
        # via https://medium.com/python-pandemonium/testing-sys-exit-with-pytest-10c6e5f7726f
        with pytest.raises(SystemExit) as pytest_wrapped_e:
            ultragap.main.main([help_str])
        assert pytest_wrapped_e.type == SystemExit
        assert pytest_wrapped_e.value.code == 0


def test_main_version(capsys):
    with pytest.raises(SystemExit) as e:
        ultragap.main.main(["--version"])
    assert e.value.code == 0
    assert "ultragap" in capsys.readouterr().out


def test_validate(capsys, six_point_csv, path_csv):
    code, out = run(capsys, ["validate", "-i", str(six_point_csv)])
    assert code == ExitCode.OK
    assert json.loads(out)["kind"] == "ultrametric"

    code, out = run(capsys, ["validate", "-i", str(path_csv)])
    assert code == ExitCode.GENERAL_METRIC
    doc = json.loads(out)
    assert doc["kind"] == "general-metric"
    assert [(v["i"], v["j"], v["k"]) for v in doc["ultrametric_violations"]][0] == ("x", "z", "y")


def test_validate_not_a_metric(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n0,1,5\n1,0,1\n5,1,0\n")
    code, out = run(capsys, ["validate", "-i", str(p)])
    assert code == ExitCode.NOT_A_METRIC
    assert json.loads(out)["kind"] is None

    p.write_text("a,b\n0,1\n2,0\n")
    code, out = run(capsys, ["validate", "-i", str(p)])
    assert code == ExitCode.NOT_A_METRIC
    doc = json.loads(out)
    assert doc["kind"] is None
    assert doc["structural_errors"] == [{"reason": "asymmetric matrix", "indices": [[0, 1]]}]


def test_validate_duplicate_points(capsys, tmp_path):
    p = tmp_path / "dup.csv"
    p.write_text("a,b,c\n0,0,1\n0,0,1\n1,1,0\n")
    code, out = run(capsys, ["validate", "-i", str(p)])
    assert code == ExitCode.NOT_A_METRIC
    assert json.loads(out)["structural_errors"][0]["indices"] == [[0, 1]]

    code, out = run(capsys, ["validate", "-i", str(p), "--out", "text", "--color", "never"])
    assert code == ExitCode.NOT_A_METRIC
    assert "distinct points at distance zero" in out
    assert "(0, 1)" in out

    # commands other than validate report on stderr only
    code, out = run(capsys, ["gap", "-i", str(p), "--p", "1"])
    assert code == ExitCode.NOT_A_METRIC
    assert out == ""


def test_invalid_input(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n0,x\n1,0\n")
    assert run(capsys, ["gap", "-i", str(p), "--p", "1"])[0] == ExitCode.INVALID_INPUT
    assert run(capsys, ["gap", "-i", str(tmp_path / "missing.csv"), "--p", "1"])[0] == ExitCode.INVALID_INPUT


def test_gap(capsys, six_point_csv):
    code, out = run(capsys, ["gap", "-i", str(six_point_csv), "--p", "1"])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert doc["value"] == pytest.approx(23 / 60, abs=1e-11)
    assert doc["partitions_explored"] == 31
    assert len(doc["witness"]) == 6


def test_gap_with_oracle(capsys, six_point_csv):
    code, out = run(capsys, ["gap", "-i", str(six_point_csv), "--p", "2", "--trials", "5000", "--seed", "1"])
    assert code == ExitCode.OK
    assert json.loads(out)["value"] == pytest.approx(13 / 32, abs=1e-11)


def test_gap_general_metric(capsys, path_csv):
    code, out = run(capsys, ["gap", "-i", str(path_csv), "--p", "1"])
    assert code == ExitCode.OK

    code, out = run(capsys, ["gap", "-i", str(path_csv), "--p", "3"])
    assert code == ExitCode.SOLVER_FAILURE
    doc = json.loads(out)
    assert doc["error"] == "NegativeTypeError"
    assert doc["value"] < 0
    assert len(doc["witness"]) == 3


def test_gap_exponent_out_of_range(capsys, six_point_csv):
    assert run(capsys, ["gap", "-i", str(six_point_csv), "--p", "31"])[0] == ExitCode.INVALID_INPUT


def test_ultrametric_commands_reject_general_metrics(capsys, path_csv):
    for command in ("asymptote", "classify", "curve", "dendrogram"):
        assert run(capsys, [command, "-i", str(path_csv)])[0] == ExitCode.GENERAL_METRIC


def test_curve(capsys, six_point_csv):
    code, out = run(capsys, ["curve", "-i", str(six_point_csv), "--grid", "0:2:3"])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert [point["p"] for point in doc["points"]] == [0, 1, 2]
    assert [point["gamma"] for point in doc["points"]] == pytest.approx([1 / 3, 23 / 60, 13 / 32], abs=1e-11)
    assert doc["gamma_infinity"] == "3/7"


def test_curve_csv(capsys, six_point_csv):
    code, out = run(capsys, ["curve", "-i", str(six_point_csv), "--grid", "0:1:2", "--out", "csv"])
    assert code == ExitCode.OK
    lines = out.splitlines()
    assert lines[0] == "p,gamma,gamma_over_alpha1_p,residual_to_infinity"
    assert len(lines) == 4
    assert lines[-1].startswith("inf,,0.428571428571,0")


def test_asymptote(capsys, six_point_csv, seven_point_json):
    code, out = run(capsys, ["asymptote", "-i", str(six_point_csv), "--mode", "rational"])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert doc["gamma_infinity"] == "3/7"
    assert doc["coterie_sizes"] == [2, 3]
    assert doc["witness"] == ["0", "3/7", "-3/7", "4/7", "-2/7", "-2/7"]

    code, out = run(capsys, ["asymptote", "-i", str(seven_point_json)])
    assert code == ExitCode.OK
    assert json.loads(out)["gamma_infinity"] == "1"


def test_classify(capsys, six_point_csv):
    code, out = run(capsys, ["classify", "-i", str(six_point_csv), "--mode", "rational"])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert doc["kind"] == "non-constant"
    assert doc["gamma_zero"] == "1/3"
    assert doc["uncovered"] == ["z1"]


def test_dendrogram(capsys, six_point_csv, seven_point_json):
    code, out = run(capsys, ["dendrogram", "-i", str(six_point_csv), "--mode", "rational"])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert doc["labels"] == ["z1", "z2", "z3", "z4", "z5", "z6"]
    assert [level["height"] for level in doc["levels"]] == [1, 2]

    code, out = run(capsys, ["dendrogram", "-i", str(seven_point_json)])
    assert code == ExitCode.OK
    lines = out.splitlines()
    assert lines[0] == "z1,z2,z3,z4,z5,z6,z7"
    assert lines[5] == "4,4,4,3,0,1,2"


def test_verify(capsys, six_point_csv):
    code, out = run(capsys, ["verify", "-i", str(six_point_csv), "-G", "0.4", "--p", "20"])
    assert code == ExitCode.OK
    assert json.loads(out)["holds"] is True

    code, out = run(capsys, ["verify", "-i", str(six_point_csv), "-G", "0.4", "--p", "1"])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert doc["holds"] is False
    assert doc["witness"] is not None


def test_coefficients(capsys, tmp_path, six_point_csv):
    w = tmp_path / "w.json"
    w.write_text('{"omega": [0, "3/7", "-3/7", "4/7", "-2/7", "-2/7"]}')
    code, out = run(capsys, ["coefficients", "-i", str(six_point_csv), "--mode", "rational", "--simplex", str(w)])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert doc["flat"] is True
    assert doc["trend"] == "constant"
    assert [c["c"] for c in doc["coefficients"]] == ["3/7", 0]

    code, out = run(
        capsys,
        ["coefficients", "-i", str(six_point_csv), "--mode", "rational", "--simplex", str(w), "--out", "csv"],
    )
    assert code == ExitCode.OK
    assert out.splitlines()[1:] == ["1,1,3/7,3/7", "2,2,0,0"]

    w.write_text('{"omega": [1, 1]}')
    code, _ = run(capsys, ["coefficients", "-i", str(six_point_csv), "--simplex", str(w)])
    assert code == ExitCode.INVALID_INPUT


def test_oracle(capsys, six_point_csv):
    code, out = run(capsys, ["oracle", "-i", str(six_point_csv), "--p", "1", "--trials", "20000", "--seed", "2"])
    assert code == ExitCode.OK
    doc = json.loads(out)
    assert doc["value"] == pytest.approx(23 / 60, abs=1e-6)
    assert doc["seed"] == 2


def test_text_output(capsys, six_point_csv):
    code, out = run(capsys, ["gap", "-i", str(six_point_csv), "--p", "1", "--out", "text", "--color", "never"])
    assert code == ExitCode.OK
    assert "0.383333333333" in out
    assert "z2" in out
