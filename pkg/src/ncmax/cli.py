"""Command line harness.

Every subcommand writes deterministic JSON (sorted keys, no timestamps) to
``--out`` (a directory) or to stdout, and exits 0 exactly when all asserted
inequalities hold.  Malformed input exits 2 with a message naming the field.

CSV columns (``report --format csv`` and growth sweeps)::

    label,grid,value,slope
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import families as fam
from .algebra import AlgebraError, Operator
from .envelope import EnvelopeProblem, solve_envelope, verify_counterexample_growth
from .lambdas import OperatorSequence, lambda_decompose, mu_function
from .marcin import InterpolationParams, OracleViolation, ParameterError, marcinkiewicz_majorant
from .oracle import Filtration, cuculescu_oracle, doob_family, uniform_oracle
from .stepfn import lorentz_norm, mu
from .suite import CheckResult, _plain, core_suite, full_suite

SCHEMA = "ncmax/1"
CSV_COLUMNS = ["label", "grid", "value", "slope"]


class InputError(Exception):
    pass


def _read_json(path: str | None, what: str):
    if path is None:
        raise InputError(f"{what}: --in is required")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{what}: cannot read {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(obj, dict):
        raise InputError(f"{what}: top level must be an object")
    if obj.get("schema", SCHEMA) != SCHEMA:
        raise InputError(f"{what}: field 'schema' must be {SCHEMA!r}, got {obj.get('schema')!r}")
    return obj


def _load_operator(path):
    obj = _read_json(path, "operator")
    try:
        return Operator.from_json(obj)
    except (AlgebraError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"operator: {exc}") from exc


def _load_sequence(path):
    obj = _read_json(path, "sequence")
    try:
        return OperatorSequence.from_json(obj)
    except (AlgebraError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{exc}") from exc


def _load_params(text: str | None, p: float | None):
    if text is None:
        return InterpolationParams(1.0, np.inf, 2.0 if p is None else p)
    src = Path(text).read_text() if Path(text).is_file() else text
    try:
        obj = json.loads(src)
    except json.JSONDecodeError as exc:
        raise InputError(f"params: not valid JSON ({exc.msg})") from exc
    try:
        return InterpolationParams.from_json(obj)
    except (ParameterError, TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _load_filtration(family: str | None, filtration: str | None):
    if filtration is not None:
        family = f"doob:{filtration}"
    if family is None:
        raise InputError("family: give --family doob:<filtration.json> or --filtration <file>")
    kind, _, arg = family.partition(":")
    if kind == "doob":
        obj = _read_json(arg, "filtration")
        try:
            return Filtration.from_json(obj)
        except (AlgebraError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"filtration: {exc}") from exc
    if kind == "tensor":
        return Filtration.tensor_tower(int(arg or 3))
    if kind == "dyadic":
        return Filtration.dyadic_diagonal(int(arg or 3))
    raise InputError(f"family: unknown kind {kind!r} (use doob:<file>, tensor:<depth> or dyadic:<depth>)")


def _dump(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _emit(args, name: str, obj=None, text: str | None = None):
    body = text if text is not None else _dump(obj)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(body)
    else:
        sys.stdout.write(body)


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r[0], r[1], repr(float(r[2])), repr(float(r[3]))])
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands


def cmd_norm(args) -> int:
    x = _load_operator(args.inp)
    p = 2.0 if args.p is None else args.p
    q = p if args.q is None else args.q
    f = mu(x)
    out = {"schema": SCHEMA, "p": p, "q": q, "lp_norm": x.lp_norm(p), "lorentz_norm": lorentz_norm(f, p, q),
           "operator_norm": x.norm(), "mu": f.to_json()}
    _emit(args, "norm.json", out)
    return 0


def cmd_majorant(args) -> int:
    x = _load_operator(args.inp)
    F = _load_filtration(args.family, args.filtration)
    if x.algebra != F.algebra:
        raise InputError("operator: field 'algebra' does not match the filtration's algebra")
    params = _load_params(args.params, args.p)
    S = doob_family(F)
    cert = marcinkiewicz_majorant(S, cuculescu_oracle(F), uniform_oracle(S, 1.0), x, params,
                                  args.weights, args.trunc)
    out = {"schema": SCHEMA, "params": params.to_json(), "weights": args.weights}
    out.update(cert.to_json())
    _emit(args, "certificate.json", out)
    return 0 if cert.passed else 1


def cmd_lambda(args) -> int:
    X = _load_sequence(args.inp)
    mode = {"c": "column", "r": "row"}.get(args.mode, args.mode)
    p = 2.0 if args.p is None else args.p
    q = p if args.q is None else args.q
    mf = mu_function(X, mode, args.method)
    out = {"schema": SCHEMA, "mode": mode, "method": args.method, "p": p, "q": q, "exact": mf.exact,
           "mu": mf.f.to_json(), "norm": lorentz_norm(mf.f, p, q)}
    ok = True
    if mode in ("column", "row") and p > 1:
        dec = lambda_decompose(X, p, q, 1.0, mode, args.method)
        out["decomposition"] = {k: v for k, v in dec.report.items()}
        ok = dec.report.get("residual", 0.0) <= 1e-8 * max(1.0, X.sup_norm())
    _emit(args, "lambda.json", out)
    return 0 if ok else 1


def cmd_envelope(args) -> int:
    p = 2.0 if args.p is None else args.p
    if args.family:
        grid = list(range(2, (args.N or 16) + 1)) if args.family != "opti" else [1.05, 1.1, 1.2, 1.4]
        rep = verify_counterexample_growth(args.family, grid, p, args.tol)
        _emit(args, f"growth_{args.family}.csv", text=_csv(rep.csv_rows()))
        return 0 if rep.reliable else 1
    X = _load_sequence(args.inp)
    try:
        prob = EnvelopeProblem(args.kind, X, p)
    except (AlgebraError, ValueError) as exc:
        raise InputError(f"sequence: {exc}") from exc
    sol = solve_envelope(prob, args.tol)
    out = {"schema": SCHEMA}
    out.update(sol.to_json())
    _emit(args, "envelope.json", out)
    return 0 if not sol.gap_flag else 1


def cmd_counterexample(args) -> int:
    N = args.N or 4
    p = args.p
    if args.family == "asym":
        X = OperatorSequence(fam.gen_asym(N).images_of_one())
    elif args.family == "nonpos":
        X = OperatorSequence(fam.gen_nonpositive(N).images_of_one())
    elif args.family == "opti":
        X, _ = fam.gen_opti(N, seed=args.seed, p=2.0 if p is None else p)
    elif args.family == "ll":
        X = fam.gen_Ll(N, 4.0 if p is None else p, seed=args.seed)
    else:
        raise InputError(f"family: unknown family {args.family!r}")
    _emit(args, "seq.json", X.to_json())
    return 0


def cmd_verify(args) -> int:
    results: list[CheckResult] = core_suite(args.seed) if args.suite == "core" else full_suite(args.seed)
    for r in results:
        sys.stderr.write(r.line() + "\n")
    out = {"schema": SCHEMA, "suite": args.suite, "checks": [r.to_json() for r in results]}
    for c in out["checks"]:
        c.pop("seconds")
    _emit(args, "verify.json", out)
    return 0 if all(r.passed for r in results) else 1


def cmd_report(args) -> int:
    src = Path(args.inp or ".")
    if not src.is_dir():
        raise InputError(f"report: --in must be a directory, got {src}")
    rows = []
    for path in sorted(src.glob("*.csv")):
        with path.open() as fh:
            reader = csv.DictReader(fh)
            missing = set(CSV_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise InputError(f"report: {path.name} lacks column(s) {sorted(missing)}")
            for r in reader:
                rows.append((r["label"], r["grid"], float(r["value"]), float(r["slope"])))
    summary = {}
    for label, _, _, slope in rows:
        summary[label] = slope
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "slope"])
        for label in sorted(summary):
            w.writerow([label, repr(summary[label])])
        _emit(args, "report.csv", text=buf.getvalue())
    else:
        _emit(args, "report.json", {"schema": SCHEMA, "slopes": summary})
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncmax", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--in", dest="inp", help="input JSON file (or directory for report)")
        p.add_argument("--out", help="output directory (stdout when omitted)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--trunc", type=float, default=1e-12)
        p.add_argument("--p", type=float)
        p.add_argument("--q", type=float)
        return p

    common(sub.add_parser("norm", help="L_p and Lorentz norms of an operator"))
    m = common(sub.add_parser("majorant", help="majorant certificate for a Doob family"))
    m.add_argument("--params", help="interpolation parameters as JSON text or a JSON file")
    m.add_argument("--weights", choices=["geometric", "logsquare"], default="geometric")
    m.add_argument("--family", help="doob:<filtration.json>, tensor:<depth> or dyadic:<depth>")
    m.add_argument("--filtration", help="filtration JSON file (same as --family doob:<file>)")
    l = common(sub.add_parser("lambda", help="rearrangement and Lambda_{p,q} quasi-norm of a sequence"))
    l.add_argument("--mode", choices=["c", "r", "plain", "column", "row"], default="plain")
    l.add_argument("--method", choices=["spectral", "exhaustive"], default="spectral")
    e = common(sub.add_parser("envelope", help="envelope problem, or a growth sweep with --family",
                              description="growth CSV columns: " + ",".join(CSV_COLUMNS)))
    e.add_argument("--kind", choices=["pos", "sa", "col"], default="pos")
    e.add_argument("--family", choices=["nonpos", "ll_col", "ll_lambda", "opti"])
    e.add_argument("--N", type=int)
    c = common(sub.add_parser("counterexample", help="write one of the explicit families as seq.json"))
    c.add_argument("--family", choices=list(fam.FAMILIES), required=True)
    c.add_argument("--N", type=int)
    v = common(sub.add_parser("verify", help="run a check suite"))
    v.add_argument("--suite", choices=["core", "full"], default="core")
    r = common(sub.add_parser("report", help="aggregate growth CSV files",
                              description="input CSV columns: " + ",".join(CSV_COLUMNS)))
    r.add_argument("--format", choices=["csv", "json"], default="csv")
    return ap


COMMANDS = {
    "norm": cmd_norm,
    "majorant": cmd_majorant,
    "lambda": cmd_lambda,
    "envelope": cmd_envelope,
    "counterexample": cmd_counterexample,
    "verify": cmd_verify,
    "report": cmd_report,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, AlgebraError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (ParameterError, OracleViolation) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
