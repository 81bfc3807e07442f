"""Acceptance criteria, one test each.

Every test records a single ``criterion N: PASS|FAIL ...`` line, shown in the
"acceptance criteria" section of the pytest terminal summary.
"""

import math
import re
import time
from importlib import resources

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from cqed_teleport.cli import oracle_rows
from cqed_teleport.dispersive import convergence_table
from cqed_teleport.evolution import decompose_su2, dispersive_semiclassical, ramsey_rotation, reconstruct_su2
from cqed_teleport.hilbert import factor_out, fidelity
from cqed_teleport.lambda_atom import LambdaParams, lambda_exact_propagator
from cqed_teleport.protocol import (
    BellLabel,
    Scheme,
    bell_prepare,
    bell_state,
    cavity_plus,
    named_rotation,
    parity_probe,
    pass_pair_through_cavity,
    random_input,
    sigma_x_pair,
    teleport,
)
from cqed_teleport.script import ScriptSource, check, dump_ast, execute, parse, parse_source

SCHEMES = ("cascade", "lambda")
N_INPUTS = 100
H = math.sqrt(0.5)


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _inputs(scheme):
    rng = np.random.default_rng(2024 if scheme == "cascade" else 2025)
    return [random_input(rng) for _ in range(N_INPUTS)]


def test_criterion_1_teleportation_exactness():
    start = time.perf_counter()
    worst_p, worst_f = 0.0, 1.0
    for scheme in SCHEMES:
        for inp in _inputs(scheme):
            r = teleport(scheme, inp)
            worst_p = max(worst_p, abs(r.total_probability - 1))
            worst_f = min(worst_f, r.min_fidelity)
    elapsed = time.perf_counter() - start
    ok = worst_p <= 1e-12 and worst_f >= 1 - 1e-10 and elapsed < 5
    record(1, ok, f"|P-1|max={worst_p:.1e} min fidelity={worst_f:.15f} time={elapsed:.2f}s (limit 5s)")


def test_criterion_2_bell_preparation():
    worst_f, worst_p = 1.0, 0.0
    labels = set()
    for scheme in SCHEMES:
        for label, p, st in bell_prepare(scheme):
            labels.add((scheme, label))
            worst_f = min(worst_f, fidelity(st, bell_state(label, scheme)))
            worst_p = max(worst_p, abs(p - 0.5))
    ok = worst_f >= 1 - 1e-12 and worst_p <= 1e-12 and len(labels) == 4
    record(2, ok, f"min fidelity={worst_f:.15f} max |p-0.5|={worst_p:.1e} branches={len(labels)}")


def _probe_check(scheme, flipped):
    worst_f, worst_p, single = 1.0, 0.0, True
    for lab in BellLabel:
        psi = pass_pair_through_cavity(bell_state(lab, scheme), scheme)
        cav, rest = factor_out(psi, "C")
        target = cavity_plus(4, sign=-1 if lab in flipped else 1)
        worst_f = min(worst_f, fidelity(cav, target), fidelity(rest, bell_state(lab, scheme)))
        out = parity_probe(psi)
        expect = "e" if lab in flipped else "f"
        single &= list(out) == [expect]
        worst_p = max(worst_p, abs(out[expect].probability - 1) if expect in out else 1.0)
    return worst_f, worst_p, single


def test_criterion_3_parity_probe():
    # The cascade pair follows the keep/flip assignment directly. For the lambda
    # pair the same probe separates {Phi+, Psi+} from {Phi-, Psi-}; the
    # corrections are tabulated accordingly.
    fc, pc, sc = _probe_check("cascade", {BellLabel.PSI_PLUS, BellLabel.PSI_MINUS})
    fl, pl, sl = _probe_check("lambda", {BellLabel.PHI_MINUS, BellLabel.PSI_MINUS})
    ok = min(fc, fl) >= 1 - 1e-12 and max(pc, pl) <= 1e-12 and sc and sl
    record(
        3,
        ok,
        f"cascade: Phi keep / Psi flip min fidelity={fc:.15f}; lambda: Phi-/Psi- flip min fidelity={fl:.15f}; "
        f"probe single-branch p max dev={max(pc, pl):.1e}",
    )


def _pair_distribution(psi, levels):
    k = named_rotation("k", levels).matrix
    amp = np.kron(k, k) @ psi.amplitudes
    return {(a, b): abs(amp[2 * i + j]) ** 2 for i, a in enumerate(levels) for j, b in enumerate(levels)}


def test_criterion_4_sigma_x_unravel():
    expected = {
        BellLabel.PHI_PLUS: {(0, 0), (1, 1)},
        BellLabel.PHI_MINUS: {(0, 1), (1, 0)},
        BellLabel.PSI_PLUS: {(0, 0), (1, 1)},
        BellLabel.PSI_MINUS: {(0, 1), (1, 0)},
    }
    signs = {BellLabel.PHI_PLUS: 1, BellLabel.PHI_MINUS: -1, BellLabel.PSI_PLUS: 1, BellLabel.PSI_MINUS: -1}
    right_dev, wrong_max, eig_err = 0.0, 0.0, 0.0
    for scheme in SCHEMES:
        lv = Scheme(scheme).levels
        sx = sigma_x_pair(scheme).matrix
        for lab, idx in expected.items():
            st = bell_state(lab, scheme)
            dist = _pair_distribution(st, lv)
            good = {(lv[i], lv[j]) for i, j in idx}
            for pair, p in dist.items():
                if pair in good:
                    right_dev = max(right_dev, abs(p - 0.5))
                else:
                    wrong_max = max(wrong_max, p)
            eig_err = max(eig_err, float(np.abs(sx @ st.amplitudes - signs[lab] * st.amplitudes).max()))
    ok = right_dev <= 1e-12 and wrong_max < 1e-14 and eig_err <= 1e-12
    record(4, ok, f"max |p-0.5|={right_dev:.1e} wrong-pair p max={wrong_max:.1e} eigen-relation err={eig_err:.1e}")


def test_criterion_5_propagator_oracle():
    start = time.perf_counter()
    worst = {}
    unit = 0.0
    for config, n_max in (("two-level", 4), ("lambda", 4), ("lambda-nondegenerate", 2)):
        rows = oracle_rows(config, 20, 0, n_max)
        worst[config] = max(r[3] for r in rows)
        unit = max(unit, max(r[4] for r in rows))
    ok = max(worst.values()) <= 1e-8 and unit <= 1e-12
    errs = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    record(5, ok, f"20 draws each, max amplitude error {errs}; unitarity err max={unit:.1e} ({time.perf_counter() - start:.0f}s)")


def test_criterion_6_dispersive_limits():
    ratios = {}
    for config in ("two-level", "lambda"):
        rows = convergence_table(config)
        ratios[config] = [r.successive_ratio for r in rows[1:]]
    first_order = all(1.4 <= x <= 2.8 for xs in ratios.values() for x in xs)
    degradation = 0.0
    rng = np.random.default_rng(6)
    inputs = [random_input(rng) for _ in range(5)]
    for scheme in SCHEMES:
        for inp in inputs:
            ideal = teleport(scheme, inp).min_fidelity
            exact = teleport(scheme, inp, model="exact", detuning_ratio=200.0).min_fidelity
            degradation = max(degradation, ideal - exact)
    swap_ok = degradation < 1e-2
    shown = "; ".join(f"{k} " + ", ".join(f"{x:.2f}" for x in v) for k, v in ratios.items())
    record(
        6,
        first_order and swap_ok,
        f"successive ratios [{shown}] in [1.4, 2.8]: {'yes' if first_order else 'no (second-order at phi=pi)'}; "
        f"exact-vs-dispersive fidelity loss at 200: {degradation:.1e} (< 1e-2: {'yes' if swap_ok else 'no'})",
    )


def test_criterion_7_named_matrices():
    PI = math.pi
    expected = [
        (PI / 2, PI / 4, H * np.array([[1, 1], [-1, 1]])),
        (PI / 2, -PI / 4, H * np.array([[1, -1], [1, 1]])),
        (PI / 2, PI / 2, np.array([[0, 1], [-1, 0]])),
        (PI / 2, -PI / 2, np.array([[0, -1], [1, 0]])),
        (PI, PI / 4, H * np.array([[1, 1j], [1j, 1]])),
    ]
    exact = all(np.array_equal(ramsey_rotation(t, x).matrix, m.astype(complex)) for t, x, m in expected)
    exact &= np.array_equal(dispersive_semiclassical(PI).matrix, 1j * np.diag([-1, 1]).astype(complex))
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        worst = max(worst, float(np.abs(reconstruct_su2(decompose_su2(q)) - q).max()))
    record(7, exact and worst <= 1e-10, f"entry-exact rotations and phase gate: {exact}; su2 round-trip max err={worst:.1e}")


def test_criterion_8_dark_state():
    n_max = 4
    rng = np.random.default_rng(8)
    worst = 0.0
    for gt in (0.5, 1.0, 5.0):
        u = lambda_exact_propagator(LambdaParams(1.0, 1.0, 3.0, gt), n_max).matrix
        for _ in range(5):
            field = rng.normal(size=n_max + 1) + 1j * rng.normal(size=n_max + 1)
            field /= np.linalg.norm(field)
            psi = np.kron(np.array([0, 1, -1]) / math.sqrt(2), field)
            worst = max(worst, float(np.abs(u @ psi - psi).max()))
    record(8, worst <= 1e-10, f"max deviation={worst:.1e} over gt in (0.5, 1, 5)")


def _script_text(scheme):
    return (resources.files("cqed_teleport") / "data" / f"teleport-{scheme}.qp").read_text(encoding="utf-8")


def _with_input(text, scheme, zeta, xi):
    lo, hi = Scheme(scheme).levels
    state = f"({zeta.real!r}{zeta.imag:+.17g}i)|{lo}> + ({xi.real!r}{xi.imag:+.17g}i)|{hi}>"
    text = re.sub(r"^prepare A4 .*$", f"prepare A4 {state}", text, flags=re.M)
    return re.sub(r"^assert A1 (?!A2).*$", f"assert A1 {state} tol 1e-10", text, flags=re.M)


def test_criterion_9_dsl_parity():
    worst = 0.0
    for scheme in SCHEMES:
        base = _script_text(scheme)
        for inp in _inputs(scheme):
            run = execute(parse(_with_input(base, scheme, inp.zeta, inp.xi)))
            ref = teleport(scheme, inp)
            got = np.array(sorted((b.probability, b.assertions[-1].fidelity) for b in run.branches))
            want = np.array(sorted((b.probability, b.fidelity) for b in ref.branches))
            worst = max(worst, float(np.abs(got - want).max()) if got.shape == want.shape else 1.0)
    golden = True
    for scheme in SCHEMES:
        name = f"teleport-{scheme}"
        p = parse(ScriptSource(_script_text(scheme), name))
        stored = (resources.files("cqed_teleport") / "data" / f"{name}.ast.json").read_text(encoding="utf-8")
        golden &= dump_ast(p) + "\n" == stored and not check(p)
    rejects = [
        "pass A1 through C dispersive phi=pi\n",
        "atom A1 two-level e f\ncavity C fock 2\nprepare A1 |e>\nprepare C |0>\npass A1 through C lambda phi=pi\n",
        "atom A1 cascade f g\nprepare A1 |f>\nmeasure A1\non A1=x { }\n",
    ]
    rejected = 0
    for text in rejects:
        res = parse_source(text)
        diags = res.diagnostics or tuple(check(res.protocol))
        rejected += bool(diags)
    p = parse(_script_text("lambda"))
    reproducible = execute(p, "sample", 42).to_json() == execute(p, "sample", 42).to_json()
    ok = worst <= 1e-12 and golden and rejected == len(rejects) and reproducible
    record(
        9,
        ok,
        f"script vs pipeline max diff={worst:.1e} over {2 * N_INPUTS} inputs; golden AST: {golden}; "
        f"rejects {rejected}/{len(rejects)}; sample seed 42 byte-identical: {reproducible}",
    )


@pytest.fixture(scope="module", autouse=True)
def _header():
    ACCEPTANCE_LINES.clear()
    yield
