import json
import re
from importlib import resources

import numpy as np
import pytest

from cqed_teleport.protocol import InputState, Scheme, teleport
from cqed_teleport.script import (
    ScriptError,
    ScriptSource,
    check,
    dump_ast,
    execute,
    format_protocol,
    load,
    parse,
    parse_source,
    tokenize,
    validate,
)
from cqed_teleport.script.nodes import AssertFidelity, Measure, OnOutcome, Pass

DATA = resources.files("cqed_teleport") / "data"
GOLDEN = ["teleport-cascade", "teleport-lambda"]

REJECT = {
    "undeclared": ("pass A1 through C dispersive phi=pi\n", [(1, "A1")]),
    "lexical": ("atom A1 cascade f g\nprepare A1 |f> $\n", [(2, "'$'")]),
    "syntax": ("atom A1 cascade f g\nprepare A1\n", [(2, "expected")]),
    "duplicate": ("atom A1 cascade f g\natom A1 cascade f g\n", [(2, "duplicate")]),
    "config": (
        "cavity C fock 2\natom A1 two-level e f\nprepare C |0>\nprepare A1 |e>\npass A1 through C lambda phi=pi\n",
        [(5, "two-level")],
    ),
    "level": ("atom A1 cascade f g\nprepare A1 |f>\nmeasure A1\non A1=x { }\n", [(4, "'x'")]),
    "unprepared": ("atom A1 cascade f g\nmeasure A1\n", [(2, "not prepared")]),
    "norm": ("atom A1 cascade f g\nprepare A1 |f> + |g>\n", [(2, "normalised")]),
    "tolerance": ("atom A1 cascade f g\nprepare A1 |f>\nassert A1 |f> tol 2\n", [(3, "tolerance")]),
}


def _diagnostics(text):
    res = parse_source(text)
    if res.diagnostics:
        return res.diagnostics
    return tuple(check(res.protocol))


def _golden_text(name):
    return (DATA / f"{name}.qp").read_text(encoding="utf-8")


def _with_input(text, scheme, zeta, xi):
    lo, hi = Scheme(scheme).levels
    state = f"({zeta.real!r}{zeta.imag:+.17g}i)|{lo}> + ({xi.real!r}{xi.imag:+.17g}i)|{hi}>"
    text = re.sub(r"^prepare A4 .*$", f"prepare A4 {state}", text, flags=re.M)
    return re.sub(r"^assert A1 (?!A2).*$", f"assert A1 {state} tol 1e-10", text, flags=re.M)


def test_tokenize_basic():
    toks, diags = tokenize("prepare A1 0.6|f> + 0.8i|g> # note\n")
    assert not diags
    kinds = [t.kind for t in toks]
    assert kinds[:3] == ["NAME", "NAME", "NUMBER"]
    kets = [t.value for t in toks if t.kind == "KET"]
    assert kets == [("f",), ("g",)]


def test_minimal_script_parses():
    p = parse("atom A cascade f g\nprepare A |f>\nmeasure A\n")
    assert [a.name for a in p.atoms] == ["A"]
    assert isinstance(p.steps[-1], Measure)


@pytest.mark.parametrize("case", sorted(REJECT))
def test_reject_cases(case):
    text, expected = REJECT[case]
    diags = _diagnostics(text)
    assert diags
    lines = text.split("\n")
    for d in diags:
        assert 1 <= d.line <= len(lines)
        assert 1 <= d.column <= len(lines[d.line - 1]) + 1
    for line, needle in expected:
        assert any(d.line == line and needle in d.message for d in diags), [str(d) for d in diags]


def test_parse_raises_with_all_diagnostics():
    with pytest.raises(ScriptError) as err:
        parse("pass A1 through C dispersive phi=pi\n")
    assert len(err.value.diagnostics) == 2


def test_validator_reports_every_violation():
    text = "atom A1 cascade f g\nmeasure A1\natom A2 two-level e f\nmeasure A2\n"
    assert len(_diagnostics(text)) == 2


def test_validate_raises():
    p = parse("atom A1 cascade f g\nmeasure A1\n")
    with pytest.raises(ScriptError):
        validate(p)


def test_load_rejects_non_utf8(tmp_path):
    f = tmp_path / "bad.qp"
    f.write_bytes(b"atom A1 cascade f g\n\xff\n")
    with pytest.raises(ScriptError):
        load(f)


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_ast(name):
    p = parse(ScriptSource(_golden_text(name), name))
    assert dump_ast(p) + "\n" == (DATA / f"{name}.ast.json").read_text(encoding="utf-8")
    assert len(p.atoms) == 5 and len(p.cavities) == 1
    probes = [s for s in p.steps if isinstance(s, OnOutcome)]
    assert sorted(s.pattern[0][1] for s in probes) == ["e", "f"]
    assert all(isinstance(inner, OnOutcome) for s in probes for inner in s.body)
    json.loads(dump_ast(p))


@pytest.mark.parametrize("name", GOLDEN)
def test_print_parse_fixed_point(name):
    p = parse(_golden_text(name))
    printed = format_protocol(p)
    q = parse(printed)
    assert q == p
    assert format_protocol(q) == printed


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_scripts_validate(name):
    assert check(parse(_golden_text(name))) == []


def test_lambda_pass_creates_atom_cavity_entanglement():
    text = (
        "cavity C fock 3\n"
        "atom A1 lambda b c\n"
        "prepare C (|0> + |1>)/sqrt2\n"
        "prepare A1 |b>\n"
        "pass A1 through C lambda phi=pi\n"
        "assert A1 C (|b,0> - |c,1>)/sqrt2 tol 1e-12\n"
    )
    r = execute(parse(text))
    assert len(r.branches) == 1
    assert r.branches[0].probability == pytest.approx(1, abs=1e-12)
    assert r.all_passed


def test_failed_assertion_is_reported():
    text = "atom A cascade f g\nprepare A |f>\nassert A |g> tol 1e-6\n"
    r = execute(parse(text))
    assert not r.all_passed
    assert r.branches[0].assertions[0].fidelity == pytest.approx(0, abs=1e-15)


def test_keep_postselects_without_changing_probability():
    text = "atom A two-level e f\nprepare A (|e> + |f>)/sqrt2\nmeasure A keep f\n"
    r = execute(parse(text))
    assert len(r.branches) == 1
    assert r.branches[0].probability == pytest.approx(1)
    assert r.branches[0].acceptance == pytest.approx(0.5)


def test_named_and_raw_rotations_agree():
    a = execute(parse("atom A cascade f g\nprepare A |f>\nrotate A plus\nassert A (|f> - |g>)/sqrt2 tol 1e-12\n"))
    b = execute(parse("atom A cascade f g\nprepare A |f>\nrotate A ramsey(pi/2, pi/4)\nassert A (|f> - |g>)/sqrt2 tol 1e-12\n"))
    assert a.all_passed and b.all_passed


@pytest.mark.parametrize("name", GOLDEN)
def test_sample_mode_is_byte_reproducible(name):
    p = parse(_golden_text(name))
    first = execute(p, mode="sample", seed=42).to_json()
    assert execute(p, mode="sample", seed=42).to_json() == first
    assert len(json.loads(first)["branches"]) == 1


@pytest.mark.parametrize("scheme", ["cascade", "lambda"])
def test_dsl_matches_teleport(scheme):
    rng = np.random.default_rng(11)
    for _ in range(3):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        text = _with_input(_golden_text(f"teleport-{scheme}"), scheme, complex(v[0]), complex(v[1]))
        run = execute(parse(text))
        ref = teleport(scheme, InputState(complex(v[0]), complex(v[1])))
        got = sorted((b.probability, b.assertions[-1].fidelity) for b in run.branches)
        want = sorted((b.probability, b.fidelity) for b in ref.branches)
        assert len(got) == len(want)
        np.testing.assert_allclose(np.array(got), np.array(want), atol=1e-12)
        assert run.all_passed


def test_pass_nodes_record_propagator():
    p = parse(_golden_text("teleport-cascade"))
    kinds = {s.propagator.kind for s in p.steps if isinstance(s, Pass)}
    assert kinds == {"dispersive", "jc"}
    assert any(isinstance(s, AssertFidelity) and s.targets == ("A1", "A2") for s in p.steps)
