import json
import subprocess
import sys

import pytest

from termlab.cli import EXIT_FAILED, EXIT_FUEL, EXIT_INPUT, EXIT_OK, main

from conftest import DATA

SEVEN = str(DATA / "seven.rel")
ADDITION = str(DATA / "addition.trs")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_rel(capsys):
    code, out, _ = run(capsys, "rel", SEVEN, "--element", "2", "--json")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["tree"] == [2, 4, 1, 3, 5, 6, 7]
    assert payload["dc"] == 3 and payload["length"] == 7


@pytest.mark.parametrize("path", ["gamma", "psi"])
@pytest.mark.parametrize("element, tree", [(2, [2, 4, 1, 3, 5, 6, 7]), (7, [7]), (4, [4, 1, 3, 5, 6])])
def test_derive_fixture(capsys, path, element, tree):
    code, out, _ = run(capsys, "derive", SEVEN, "--element", str(element), "--path", path, "--json")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["tree"] == [str(x) for x in tree]
    assert payload["length"] == len(tree)


def test_check_fixture_and_addition(capsys):
    assert run(capsys, "check", SEVEN)[0] == EXIT_OK
    code, out, _ = run(capsys, "check", ADDITION, "--k", "3")
    assert code == EXIT_OK
    assert "ok" in out.splitlines()[-1]


def test_check_reports_unoriented_rule(tmp_path, capsys):
    bad = tmp_path / "loop.trs"
    bad.write_text("SIG f/1 a/0\nRULES\nf(a) -> f(a)\n")
    code, out, _ = run(capsys, "check", str(bad), "--k", "1")
    assert code == EXIT_FAILED
    assert "NOT ORIENTED  f(a) -> f(a)" in out


def test_malformed_file_exits_2_with_position(tmp_path, capsys):
    bad = tmp_path / "bad.trs"
    bad.write_text("SIG f/1\nVAR x\nRULES\nf(x, x) -> x\n")
    code, _, err = run(capsys, "check", str(bad))
    assert code == EXIT_INPUT
    assert "line 4" in err and "column" in err


def test_missing_file_exits_2(capsys):
    assert run(capsys, "check", "/nonexistent/file.trs")[0] == EXIT_INPUT


def test_bad_term_exits_2(capsys):
    code, _, err = run(capsys, "derive", ADDITION, "--k", "3", "--term", "plus(0)")
    assert code == EXIT_INPUT and "--term" in err


def test_derive_term(capsys):
    code, out, _ = run(capsys, "derive", ADDITION, "--k", "3", "--term", "plus(s(0), 0)", "--json")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["root"] == "plus(s(0), 0)"
    assert payload["length"] >= 3
    assert payload["tree"] is None or payload["tree"][0] == "plus(s(0), 0)"


def test_derive_leaf(capsys):
    code, out, _ = run(capsys, "derive", ADDITION, "--k", "3", "--term", "0", "--json", "--force")
    assert code == EXIT_OK
    assert json.loads(out)["tree"] == ["0"]


@pytest.mark.parametrize("term, actual", [("plus(0, 0)", 1), ("s(s(0))", 0), ("plus(s(s(0)), 0)", 3)])
def test_dc_term(capsys, term, actual):
    code, out, _ = run(capsys, "dc", ADDITION, "--k", "3", "--term", term, "--json")
    assert code == EXIT_OK
    (row,) = json.loads(out)["rows"]
    assert row["actual"] == actual and row["bound"] >= actual and row["ok"]


def test_dc_sweep_small(capsys):
    code, out, _ = run(capsys, "dc", ADDITION, "--k", "3", "--sweep", "3")
    assert code == EXIT_OK
    assert out.splitlines()[-1].startswith("7 term(s), 0 violation(s)")


def test_fuel_exhaustion_exits_3(capsys, monkeypatch):
    monkeypatch.setenv("TERMLAB_FUEL", "3")
    code, _, err = run(capsys, "derive", ADDITION, "--k", "3", "--term", "plus(s(0), s(0))", "--force")
    assert code == EXIT_FUEL
    assert "fuel" in err


def test_bad_fuel_setting(capsys, monkeypatch):
    monkeypatch.setenv("TERMLAB_FUEL", "lots")
    assert run(capsys, "rel", SEVEN, "--element", "2")[0] == EXIT_INPUT


def test_json_output_is_deterministic():
    cmd = [sys.executable, "-m", "termlab.cli", "dc", ADDITION, "--k", "3", "--sweep", "3", "--json"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second
    assert json.loads(first)["violations"] == 0
