from __future__ import annotations

import json

import pytest

from cantorcf.cli import main, parse_rational


def construct(tmp_path, name, *extra):
    out = tmp_path / name
    rc = main(["construct", *extra, "--out", str(out)])
    return rc, out


@pytest.fixture()
def cert_a(tmp_path):
    rc, out = construct(tmp_path, "a.json", "--base", "3", "--digits", "0,1", "--psi", "1", "--epsilon", "1", "--mode", "relaxed", "--depth", "3")
    assert rc == 0
    return out


@pytest.fixture()
def cert_b(tmp_path):
    rc, out = construct(tmp_path, "b.json.gz", "--base", "3", "--digits", "0,2", "--mode", "strict", "--depth", "2")
    assert rc == 0
    return out


def test_construct_summary(cert_a, capsys):
    doc = json.loads(cert_a.read_text())
    assert [s["q"] for s in doc["steps"]] == ["2", "13", str((3**42 - 1) // 13)]
    assert doc["verification"]["options"] == {"digit_budget": 100000, "max_precision": 4096}


def test_construct_rejects_full_digit_set(tmp_path, capsys):
    rc, _ = construct(tmp_path, "x.json", "--base", "3", "--digits", "0,1,2")
    assert rc == 2
    assert "proper subset" in capsys.readouterr().err


@pytest.mark.parametrize(
    "args",
    [
        ["--base", "3", "--digits", "0,1", "--psi", "q^"],
        ["--base", "3", "--digits", "0,1", "--epsilon", "0.5"],
        ["--base", "3", "--digits", "0,1", "--pair", "0,2"],
        ["--base", "3", "--digits", "a,b"],
    ],
)
def test_construct_usage_errors(tmp_path, args):
    assert construct(tmp_path, "x.json", *args)[0] == 2


def test_construct_budget_exit(tmp_path):
    rc, out = construct(tmp_path, "c2.json", "--base", "3", "--digits", "0,2", "--psi", "q^-2", "--mode", "strict", "--depth", "2", "--max-bits", "60000")
    assert rc == 3
    doc = json.loads(out.read_text())
    assert doc["status"] == "budget-exhausted" and doc["steps"][0]["q"] == "3280"
    assert main(["verify", str(out)]) == 0


def test_verify_and_filter(cert_a, capsys):
    assert main(["verify", str(cert_a)]) == 0
    capsys.readouterr()
    assert main(["verify", str(cert_a), "--checks", "determinant,identity", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert {c["check"] for c in doc["checks"]} == {"determinant", "identity"}
    assert main(["verify", str(cert_a), "--checks", "nonsense"]) == 2


def test_verify_corrupted(cert_a, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(cert_a.read_text().replace('"q": "13"', '"q": "14"'))
    assert main(["verify", str(bad)]) == 1
    assert "fail" in capsys.readouterr().out
    bad.write_text("not json")
    assert main(["verify", str(bad)]) == 1
    assert main(["verify", str(tmp_path / "missing.json")]) == 2


def test_expand(cert_a, cert_b, capsys):
    assert main(["expand", str(cert_a), "12"]) == 0
    assert capsys.readouterr().out.strip() == "110110110110"
    assert main(["expand", str(cert_b), "16"]) == 0
    assert capsys.readouterr().out.strip() == "0000000200000002"
    assert main(["expand", str(cert_a), "0"]) == 0
    assert capsys.readouterr().out == "\n"


def test_expand_beyond_guarantee(tmp_path, capsys):
    rc, out = construct(tmp_path, "s.json", "--base", "3", "--digits", "0,2", "--mode", "strict", "--depth", "1")
    assert rc == 0
    capsys.readouterr()
    assert main(["expand", str(out), "100000"]) == 3
    captured = capsys.readouterr()
    digits = captured.out.strip()
    # v, then w1 repeated m2 = 6556 times, then w1 with its last digit flipped
    assert digits == "0" * 7 + "20000000" * 6556 + "20000002"
    assert "certified" in captured.err


def test_cf(cert_a, capsys):
    assert main(["cf", "--p", "6", "--q", "13"]) == 0
    assert capsys.readouterr().out.split() == ["[0;", "2,", "6]", "0/1", "1/2", "6/13"]
    assert main(["cf", str(cert_a), "--index", "2"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "[0; 2, 6]"
    assert main(["cf", "--p", "1", "--q", "2"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "[0; 2]"
    assert main(["cf", "--p", "2", "--q", "4"]) == 2
    assert main(["cf", "--p", "5", "--q", "3"]) == 2
    assert main(["cf", str(cert_a), "--index", "9"]) == 2


def test_demo(capsys):
    assert main(["demo"]) == 0
    out = capsys.readouterr().out
    assert out.count("overall: pass") == 2
    assert main(["demo", "--only", "0,1", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [d["digits"] for d in doc] == ["0,1"] and doc[0]["overall"] == "pass"
    assert main(["demo", "--only", "1,2"]) == 2


def test_parse_rational():
    assert str(parse_rational("3/4")) == "3/4"
    assert parse_rational("2") == 2
    for bad in ("0.5", "-1", "1/0", "x"):
        with pytest.raises(Exception):
            parse_rational(bad)


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "cantorcf", "cf", "--p", "6", "--q", "13"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("[0; 2, 6]")
