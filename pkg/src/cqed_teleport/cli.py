"""``qsim`` command-line front end.

Exit codes: 0 on success with every in-report check passing, 1 when a script
is rejected or a check fails, 2 on usage errors (bad flags, missing files).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import oracle
from .dispersive import DEFAULT_RATIOS, convergence_table
from .evolution import JcParams, jc_exact_propagator
from .hilbert import fidelity, unitarity_error
from .lambda_atom import LambdaParams, lambda_exact_nondegenerate, lambda_exact_propagator
from .protocol import DEFAULT_NMAX, InputState, bell_prepare, bell_state, format_real, teleport
from .script import ScriptError, execute, load

FIDELITY_TOL = 1e-10
ORACLE_TOL = 1e-8


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``a``, ``bi`` or ``a+bi`` (optional signs), e.g. ``-0.3+0.4i``."""
    s = text.strip()
    bad = UsageError(f"cannot parse complex number {text!r}; use forms like 0.6, 0.8i, -0.3+0.4i")
    if not s or "j" in s.lower() or " " in s:
        raise bad
    if s.endswith("i"):
        head = s[:-1]
        # A bare "i" (or "+i"/"-i") means unit imaginary part.
        if head in ("", "+", "-") or (head[-1] in "+-" and head[-2] not in "eE"):
            head += "1"
        s = head + "j"
    try:
        return complex(s)
    except ValueError:
        raise bad from None


def default_nmax() -> int:
    env = os.environ.get("QSIM_NMAX")
    if env is None:
        return DEFAULT_NMAX
    try:
        n = int(env)
    except ValueError:
        raise UsageError(f"QSIM_NMAX must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("QSIM_NMAX must be >= 1")
    return n


def fmt12(x: float) -> str:
    return f"{x:.12f}"


def _emit_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- subcommands -------------------------------------------------------------


def cmd_run(args) -> tuple[str, int]:
    if not os.path.isfile(args.file):
        raise UsageError(f"script file not found: {args.file}")
    try:
        proto = load(args.file)
        report = execute(proto, args.mode, args.seed)
    except ScriptError as exc:
        sys.stderr.write(str(exc) + "\n")
        return "", 1
    code = 0 if report.all_passed else 1
    if args.format == "json":
        return report.to_json() + "\n", code
    if args.format == "csv":
        rows = []
        for k, b in enumerate(report.branches):
            outs = " ".join(f"{a}={v}" for a, v in b.outcomes.items())
            fids = " ".join(format_real(a.fidelity) for a in b.assertions)
            passed = all(a.passed for a in b.assertions) and b.error is None
            rows.append([k, outs, format_real(b.probability), fids, passed, b.error or ""])
        return _emit_csv(rows, ["branch", "outcomes", "probability", "assert_fidelities", "passed", "error"]), code
    lines = [f"script {report.name}  mode {report.mode}" + (f"  seed {report.seed}" if report.seed is not None else "")]
    for k, b in enumerate(report.branches):
        outs = " ".join(f"{a}={v}" for a, v in b.outcomes.items())
        lines.append(f"branch {k}: {outs}  p={fmt12(b.probability)}")
        for a in b.assertions:
            mark = "ok" if a.passed else "FAIL"
            lines.append(f"  assert line {a.line} {' '.join(a.targets)}: fidelity={fmt12(a.fidelity)} {mark}")
        if b.error:
            lines.append(f"  error: {b.error}")
    lines.append(f"total probability {fmt12(report.total_probability)}")
    lines.append("all assertions passed" if report.all_passed else "assertions FAILED")
    return "\n".join(lines) + "\n", code


def cmd_teleport(args) -> tuple[str, int]:
    zeta, xi = parse_complex(args.zeta), parse_complex(args.xi)
    if args.normalize:
        n = math.sqrt(abs(zeta) ** 2 + abs(xi) ** 2)
        if n == 0:
            raise UsageError("input amplitudes are both zero")
        zeta, xi = zeta / n, xi / n
    try:
        inp = InputState(zeta, xi)
    except ValueError as exc:
        raise UsageError(f"{exc} (pass --normalize to rescale)") from None
    report = teleport(args.scheme, inp, args.mode, args.seed, args.n_max, args.model, args.ratio)
    code = 0 if report.min_fidelity >= 1 - FIDELITY_TOL else 1
    if args.format == "json":
        return report.to_json() + "\n", code
    if args.format == "csv":
        rows = [
            [b.message.probe_outcome, " ".join(b.message.readout_pair), b.bell_label.value, b.correction,
             format_real(b.probability), format_real(b.fidelity)]
            for b in report.branches
        ]
        return _emit_csv(rows, ["probe", "readout", "bell", "correction", "probability", "fidelity"]), code
    lines = [f"teleport scheme={report.scheme.value} mode={report.mode} model={report.model}"]
    for b in report.branches:
        lines.append(
            f"probe={b.message.probe_outcome} readout={','.join(b.message.readout_pair)} "
            f"bell={b.bell_label.value} correction={b.correction} "
            f"p={fmt12(b.probability)} fidelity={fmt12(b.fidelity)}"
        )
    lines.append(f"total probability {fmt12(report.total_probability)}")
    return "\n".join(lines) + "\n", code


def cmd_bell_prep(args) -> tuple[str, int]:
    rows = []
    for label, p, st in bell_prepare(args.scheme, args.n_max):
        rows.append((label.value, p, fidelity(st, bell_state(label, args.scheme))))
    code = 0 if all(f >= 1 - 1e-12 for _, _, f in rows) else 1
    if args.format == "json":
        obj = {
            "schema": "cqed-teleport/bell-prep/1",
            "scheme": args.scheme,
            "branches": [{"bell": lab, "probability": format_real(p), "fidelity": format_real(f)} for lab, p, f in rows],
        }
        return _emit_json(obj), code
    if args.format == "csv":
        return _emit_csv([[lab, format_real(p), format_real(f)] for lab, p, f in rows], ["bell", "probability", "fidelity"]), code
    lines = [f"bell preparation scheme={args.scheme}"]
    lines += [f"{lab}: p={fmt12(p)} fidelity={fmt12(f)}" for lab, p, f in rows]
    return "\n".join(lines) + "\n", code


def _ratios(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--ratios expects comma-separated numbers, got {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise UsageError("--ratios needs positive values")
    return vals


def cmd_dispersive_check(args) -> tuple[str, int]:
    n_max = max(args.n_max, 4)
    rows = convergence_table(args.config, _ratios(args.ratios), args.phi, 3, n_max)
    if args.format == "json":
        obj = {
            "schema": "cqed-teleport/dispersive-check/1",
            "config": args.config,
            "phi": format_real(args.phi),
            "rows": [
                {
                    "ratio": format_real(r.ratio),
                    "distance": format_real(r.distance),
                    "successive_ratio": None if r.successive_ratio is None else format_real(r.successive_ratio),
                }
                for r in rows
            ],
        }
        return _emit_json(obj), 0
    if args.format == "csv":
        data = [[format_real(r.ratio), format_real(r.distance), "" if r.successive_ratio is None else format_real(r.successive_ratio)] for r in rows]
        return _emit_csv(data, ["ratio", "distance", "successive_ratio"]), 0
    lines = [f"dispersive check config={args.config} phi={args.phi:.12f}", "delta/g  distance  successive_ratio"]
    for r in rows:
        succ = "-" if r.successive_ratio is None else fmt12(r.successive_ratio)
        lines.append(f"{r.ratio:g}  {fmt12(r.distance)}  {succ}")
    return "\n".join(lines) + "\n", 0


def oracle_rows(config: str, draws: int, seed: int, n_max: int):
    """Random (delta/g, gt) draws; max amplitude error against the RK4 oracle."""
    rng = np.random.default_rng(seed)
    deltas = rng.uniform(2, 10, draws)
    gts = rng.uniform(0, 5, draws)
    if config == "two-level":
        A = np.stack([oracle.jc_coupling(1.0, n_max)] * draws)
        exact = [jc_exact_propagator(JcParams(1.0, d, t), n_max).matrix for d, t in zip(deltas, gts)]
    elif config == "lambda":
        A = np.stack([oracle.lambda_coupling(1.0, 1.0, n_max)] * draws)
        exact = [lambda_exact_propagator(LambdaParams(1.0, 1.0, d, t), n_max).matrix for d, t in zip(deltas, gts)]
    elif config == "lambda-nondegenerate":
        n1, n2 = min(n_max, 2), 1
        A = np.stack([oracle.nondegenerate_coupling(1.0, 1.0, n1, n2)] * draws)
        exact = [lambda_exact_nondegenerate(LambdaParams(1.0, 1.0, d, t), n1, n2).matrix for d, t in zip(deltas, gts)]
    else:
        raise UsageError(f"unknown config {config!r}")
    ref = oracle.rk4_propagator(A, deltas, gts)
    return [
        (k, float(d), float(t), float(np.abs(u - r).max()), unitarity_error(u))
        for k, (d, t, u, r) in enumerate(zip(deltas, gts, exact, ref))
    ]


def cmd_oracle_check(args) -> tuple[str, int]:
    if args.draws < 1:
        raise UsageError("--draws must be positive")
    rows = oracle_rows(args.config, args.draws, args.seed, args.n_max)
    worst = max(r[3] for r in rows)
    code = 0 if worst <= ORACLE_TOL and all(r[4] <= 1e-12 for r in rows) else 1
    if args.format == "json":
        obj = {
            "schema": "cqed-teleport/oracle-check/1",
            "config": args.config,
            "seed": args.seed,
            "max_error": format_real(worst),
            "draws": [
                {"delta": format_real(d), "gt": format_real(t), "max_error": format_real(e), "unitarity_error": format_real(u)}
                for _, d, t, e, u in rows
            ],
        }
        return _emit_json(obj), code
    if args.format == "csv":
        data = [[k, format_real(d), format_real(t), format_real(e), format_real(u)] for k, d, t, e, u in rows]
        return _emit_csv(data, ["draw", "delta", "gt", "max_error", "unitarity_error"]), code
    lines = [f"oracle check config={args.config} draws={args.draws} seed={args.seed}", "draw  delta/g  gt  max_error  unitarity_error"]
    lines += [f"{k}  {d:.6f}  {t:.6f}  {e:.3e}  {u:.3e}" for k, d, t, e, u in rows]
    lines.append(f"worst max_error {worst:.3e} ({'ok' if code == 0 else 'FAIL'})")
    return "\n".join(lines) + "\n", code


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsim", description="Cavity-QED teleportation simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, nmax=True):
        sp.add_argument("--format", choices=("json", "csv", "human"), default="json")
        if nmax:
            sp.add_argument("--n-max", type=int, default=None, help="Fock cutoff (default: $QSIM_NMAX or 4)")

    def mode(sp):
        sp.add_argument("--mode", choices=("enumerate", "sample"), default="enumerate")
        sp.add_argument("--seed", type=_seed, default=None)

    r = sub.add_parser("run", help="parse, validate and execute a .qp script")
    r.add_argument("file")
    mode(r)
    common(r, nmax=False)
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("teleport", help="built-in teleportation pipeline")
    t.add_argument("--scheme", choices=("cascade", "lambda"), required=True)
    t.add_argument("--zeta", required=True)
    t.add_argument("--xi", required=True)
    t.add_argument("--normalize", action="store_true", help="rescale (zeta, xi) to unit norm")
    t.add_argument("--model", choices=("dispersive", "exact"), default="dispersive")
    t.add_argument("--ratio", type=float, default=200.0, help="delta/g for --model exact")
    mode(t)
    common(t)
    t.set_defaults(func=cmd_teleport)

    b = sub.add_parser("bell-prep", help="Bell-pair preparation branches")
    b.add_argument("--scheme", choices=("cascade", "lambda"), required=True)
    common(b)
    b.set_defaults(func=cmd_bell_prep)

    d = sub.add_parser("dispersive-check", help="exact vs dispersive propagator convergence table")
    d.add_argument("--config", choices=("two-level", "lambda"), required=True)
    d.add_argument("--ratios", default=",".join(f"{r:g}" for r in DEFAULT_RATIOS))
    d.add_argument("--phi", type=float, default=math.pi)
    common(d)
    d.set_defaults(func=cmd_dispersive_check)

    o = sub.add_parser("oracle-check", help="closed-form propagators vs Runge-Kutta reference")
    o.add_argument("--config", choices=("two-level", "lambda", "lambda-nondegenerate"), required=True)
    o.add_argument("--draws", type=int, default=20)
    o.add_argument("--seed", type=_seed, default=0)
    common(o)
    o.set_defaults(func=cmd_oracle_check)
    return p


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "n_max", "unset") is None:
            args.n_max = default_nmax()
        if getattr(args, "mode", None) == "sample" and args.seed is None:
            raise UsageError("--mode sample requires --seed")
        out, code = args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"qsim: error: {exc}\n")
        return 2
    sys.stdout.write(out)
    return code


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
