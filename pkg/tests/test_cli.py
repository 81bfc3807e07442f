import json
import subprocess
import sys
from pathlib import Path

import pytest

from cqed_teleport.cli import UsageError, default_nmax, main, parse_complex

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"
SCRIPTS = "src/cqed_teleport/data"

CASES = [
    ("teleport-cascade.json", ["teleport", "--scheme", "cascade", "--zeta", "0.6", "--xi", "0.8i"]),
    ("teleport-lambda.txt", ["teleport", "--scheme", "lambda", "--zeta", "0.6", "--xi", "0.8i", "--format", "human"]),
    ("run-cascade.txt", ["run", f"{SCRIPTS}/teleport-cascade.qp", "--format", "human"]),
    ("run-lambda-sample.json", ["run", f"{SCRIPTS}/teleport-lambda.qp", "--mode", "sample", "--seed", "42"]),
    ("bell-prep-lambda.csv", ["bell-prep", "--scheme", "lambda", "--format", "csv"]),
    ("dispersive-two-level.txt", ["dispersive-check", "--config", "two-level", "--format", "human"]),
]


@pytest.fixture(autouse=True)
def _at_root(monkeypatch):
    monkeypatch.chdir(ROOT)
    monkeypatch.delenv("QSIM_NMAX", raising=False)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("golden, argv", CASES, ids=[c[0] for c in CASES])
def test_golden_output(golden, argv, capsys):
    code, out, _ = _run(argv, capsys)
    assert code == 0
    assert out == (GOLDEN / golden).read_text(encoding="utf-8")


def test_human_format_uses_twelve_decimals(capsys):
    _, out, _ = _run(["teleport", "--scheme", "cascade", "--zeta", "1", "--xi", "0", "--format", "human"], capsys)
    assert "p=0.125000000000 fidelity=1.000000000000" in out


@pytest.mark.parametrize(
    "text, value",
    [("0.6", 0.6), ("0.8i", 0.8j), ("-0.3+0.4i", -0.3 + 0.4j), ("i", 1j), ("-i", -1j), ("1e-3-2i", 1e-3 - 2j), ("1-i", 1 - 1j)],
)
def test_parse_complex(text, value):
    assert parse_complex(text) == value


@pytest.mark.parametrize("text", ["", "0.8j", "1 + 2i", "abc", "1+2"])
def test_parse_complex_rejects(text):
    with pytest.raises(UsageError):
        parse_complex(text)


def test_unnormalized_input_is_usage_error(capsys):
    code, _, err = _run(["teleport", "--scheme", "cascade", "--zeta", "1", "--xi", "1"], capsys)
    assert code == 2
    assert "--normalize" in err
    code, out, _ = _run(["teleport", "--scheme", "cascade", "--zeta", "1", "--xi", "1", "--normalize"], capsys)
    assert code == 0
    assert json.loads(out)["input"]["zeta"].startswith("0.70710678118654")


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["teleport", "--scheme", "ladder", "--zeta", "1", "--xi", "0"],
        ["run", "does-not-exist.qp"],
        ["run", f"{SCRIPTS}/teleport-cascade.qp", "--mode", "sample"],
        ["run", f"{SCRIPTS}/teleport-cascade.qp", "--seed", "-1"],
        ["oracle-check", "--config", "two-level", "--draws", "0"],
        ["dispersive-check", "--config", "lambda", "--ratios", "a,b"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, out, _ = _run(argv, capsys)
    assert code == 2
    assert out == ""


def test_rejected_script_exits_1(tmp_path, capsys):
    f = tmp_path / "bad.qp"
    f.write_text("pass A1 through C dispersive phi=pi\n")
    code, out, err = _run(["run", str(f)], capsys)
    assert code == 1
    assert ":1:1: error: undeclared subsystem 'A1'" in err


def test_failed_assertion_exits_1(tmp_path, capsys):
    f = tmp_path / "fail.qp"
    f.write_text("atom A cascade f g\nprepare A |f>\nassert A |g> tol 1e-6\n")
    code, out, _ = _run(["run", str(f), "--format", "csv"], capsys)
    assert code == 1
    assert out.splitlines()[1].endswith("False,")


def test_sample_seed_is_byte_reproducible(capsys):
    argv = ["teleport", "--scheme", "lambda", "--zeta", "0.6", "--xi", "0.8i", "--mode", "sample", "--seed", "7"]
    _, a, _ = _run(argv, capsys)
    _, b, _ = _run(argv, capsys)
    assert a == b
    assert len(json.loads(a)["branches"]) == 1


def test_qsim_nmax_env(monkeypatch, capsys):
    assert default_nmax() == 4
    monkeypatch.setenv("QSIM_NMAX", "6")
    assert default_nmax() == 6
    code, _, _ = _run(["bell-prep", "--scheme", "cascade"], capsys)
    assert code == 0
    monkeypatch.setenv("QSIM_NMAX", "x")
    code, _, err = _run(["bell-prep", "--scheme", "cascade"], capsys)
    assert code == 2 and "QSIM_NMAX" in err


def test_exact_model_report(capsys):
    argv = ["teleport", "--scheme", "cascade", "--zeta", "0.6", "--xi", "0.8i", "--model", "exact"]
    code, out, _ = _run(argv, capsys)
    rep = json.loads(out)
    assert code == 1  # exact passes leave small residual infidelity
    assert min(float(b["fidelity"]) for b in rep["branches"]) > 0.99


def test_oracle_check_small(capsys):
    code, out, _ = _run(["oracle-check", "--config", "two-level", "--draws", "2", "--n-max", "2"], capsys)
    assert code == 0
    assert float(json.loads(out)["max_error"]) < 1e-8


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "cqed_teleport", "bell-prep", "--scheme", "cascade", "--format", "human"],
        capture_output=True, text=True, cwd=ROOT, check=False,
    )
    assert res.returncode == 0
    assert res.stdout.startswith("bell preparation scheme=cascade")
