import json

import mpmath
import pytest

from pwsnf import cli
from pwsnf.cli import main

from conftest import DATA

EX51 = str(DATA / "quadratic.toml")
EX52 = str(DATA / "focus_tangency.toml")
EX53 = str(DATA / "tangency_family.toml")
ROT = str(DATA / "rotation.toml")


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_json(capsys):
    code, out, _ = run(capsys, "classify", EX51, "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["kind"] == "FF"
    assert d["orientation_record"] == []


def test_classify_fp_with_substitution(capsys):
    code, out, _ = run(capsys, "classify", EX52, "--set", "delta=0", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["kind"] == "FP" and d["lower"]["ell"] == 1


def test_malformed_toml(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[upper\nX = 1\n")
    code, _, err = run(capsys, "classify", str(bad))
    assert code == 2
    assert "malformed TOML" in err and "line 1" in err


def test_bad_polynomial(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('[upper]\nX = "x + + y"\nY = "x"\n[lower]\nX = "-y"\nY = "x"\n')
    code, _, err = run(capsys, "classify", str(bad))
    assert code == 2 and "token 3" in err


def test_unknown_parameter(capsys):
    code, _, err = run(capsys, "classify", EX51, "--set", "zz=1")
    assert code == 2 and "zz" in err


def test_lyapunov_tangency_family(capsys):
    code, out, _ = run(capsys, "lyapunov", EX53, "-N", "4", "--set", "kplus=1", "kminus=1", "--format", "json")
    assert code == 0
    d = json.loads(out)
    entries = {e["k"]: e for e in d["entries"]}
    assert entries[2]["V"] == "-2/3*lambda - 2/3"
    assert entries[4]["V"] == "0"
    assert entries[2]["first_nonzero"]
    assert d["orientation_record"] == ["(x,y,t)->(-x,y,t)"]


def test_lyapunov_center(capsys):
    code, out, _ = run(capsys, "lyapunov", EX53, "-N", "4", "--set", "kplus=1", "kminus=1", "lambda=-1")
    assert code == 0
    assert "center up to order 4" in out


def test_lyapunov_quadratic_text(capsys):
    code, out, _ = run(capsys, "lyapunov", EX51, "-N", "2")
    assert code == 0
    assert "V_2 = 2/3*p11 + 2/3*q20 + 4/3*q02" in out


def test_json_is_deterministic(capsys):
    outs = [run(capsys, "normal-form", EX52, "-N", "3", "--set", "delta=0", "--format", "json")[1]
            for _ in range(2)]
    assert outs[0] == outs[1]
    assert "orientation_record" in json.loads(outs[0])


def test_order_and_center_check(capsys):
    code, out, _ = run(capsys, "order", EX53, "-N", "4", "--set", "kplus=1", "kminus=1", "lambda=-2")
    assert code == 0 and out.strip() == "focus of order 1/2"
    code, out, _ = run(capsys, "center-check", EX53, "-N", "4", "--set", "kplus=1", "kminus=1", "lambda=-1")
    assert code == 0 and "truncated normal form is a center" in out


def test_possible_orders_command(capsys):
    vals = ["p20=1", "p11=0", "p02=0", "q20=1", "q11=0", "q02=0"]
    code, out, _ = run(capsys, "possible-orders", EX51, "-N", "4", "--set", *vals, "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["member"] is True


def test_crosscheck_command(capsys):
    code, out, _ = run(capsys, "crosscheck", EX51, "-N", "3")
    assert code == 0 and "crosscheck passed" in out


def test_oracle_ok(capsys):
    code, out, _ = run(capsys, "oracle", EX53, "-N", "4", "--set", "kplus=1", "kminus=1", "lambda=-2")
    assert code == 0
    assert out.strip() == "m=2, V=0.6667, symbolic=2/3, verdict=OK"


def test_oracle_center(capsys, tmp_path):
    path = tmp_path / "s.csv"
    code, out, _ = run(capsys, "oracle", ROT, "-N", "3", "--csv", str(path))
    assert code == 0 and out.startswith("center-consistent")
    assert path.read_text().startswith("x,delta")


def test_oracle_mismatch(capsys, monkeypatch):
    monkeypatch.setattr(cli, "_symbolic_leading", lambda an: (2, "5/3", mpmath.mpf(5) / 3))
    code, out, _ = run(capsys, "oracle", EX53, "-N", "4", "--set", "kplus=1", "kminus=1", "lambda=-2")
    assert code == 1 and "verdict=MISMATCH" in out


def test_oracle_needs_numbers(capsys):
    code, _, err = run(capsys, "oracle", EX51)
    assert code == 2 and "--set" in err


def test_budget_exit_code(capsys):
    code, _, err = run(capsys, "lyapunov", EX51, "-N", "5", "--budget", "1")
    assert code == 3 and "budget" in err


def test_bad_flag_values(capsys):
    assert run(capsys, "oracle", ROT, "--grid", "1,2")[0] == 2
    assert run(capsys, "lyapunov", EX51, "-N", "0")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate", EX51])
    assert info.value.code == 2
