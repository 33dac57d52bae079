"""Command-line entry point.

    qcqpcert certify problem.json [--candidate 1,0] [--strict] [-o report.json]
    qcqpcert relax problem.json          # both relaxation solves, with residuals
    qcqpcert solve problem.json --trace iters.csv
    qcqpcert dnn problem.json            # hat-conditions for nonnegative equality form
    qcqpcert sweep --example 4.1 --from 2 --to 6 --step 0.1 --csv out.csv
    qcqpcert examples --out instances/

Exit codes: 0 success, 2 invalid input, 3 INCONCLUSIVE under --strict.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from . import examples_bench as bench
from .certifier import CertifyOptions, CondStatus, certify
from .dnn_relaxation import DnnCertifyOptions, build_pdnn, certify_dnn
from .qcqp_model import InstanceError, homogenize, parse_instance, serialize_instance
from .report import dumps, jsonable, outcome_dict, report_dict
from .sdp_relaxation import build_primal_sdp, sdp_kkt_residual
from .sdp_solver import SolverOptions, Status, solve, solve_dual, trace_to_csv

log = logging.getLogger("qcqpcert")

EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 2, 3


class UsageError(Exception):
    pass


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _vector(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from exc


def _load(path: str):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return parse_instance(p.read_text())


def _solver_opts(args) -> SolverOptions:
    kw = {}
    for name in ("tol_gap", "tol_feas", "max_iters"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "precision", None):
        kw["precision"] = args.precision
    return SolverOptions(**kw)


def _meta(args) -> dict | None:
    if args.no_meta:
        return None
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    return {"command": args.command, "version": version,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds")}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _strict_exit(args, statuses: dict) -> int:
    if args.strict and any(v == CondStatus.INCONCLUSIVE for v in statuses.values()):
        log.warning("inconclusive: %s",
                    ", ".join(k for k, v in statuses.items() if v == CondStatus.INCONCLUSIVE))
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _candidate(args, inst):
    if args.candidate is None:
        return None
    if len(args.candidate) != inst.n:
        raise UsageError(f"--candidate needs {inst.n} entries, got {len(args.candidate)}")
    return args.candidate


# -- commands ----------------------------------------------------------------

def cmd_certify(args) -> int:
    inst = _load(args.input)
    if inst.nonneg_vars:
        log.info("nonnegative equality form: running the DNN report")
        return _dnn(args, inst)
    opts = CertifyOptions(solver=_solver_opts(args), minimizer=_candidate(args, inst))
    if args.tol is not None:
        opts = replace(opts, tol=args.tol)
    if args.rtol is not None:
        opts = replace(opts, rtol=args.rtol)
    if args.zeta is not None:
        opts = replace(opts, zeta=args.zeta)
    rep = certify(inst, opts)
    _emit(dumps(report_dict(rep, "sdp", _meta(args))), args.output)
    return _strict_exit(args, rep.statuses)


def _dnn(args, inst) -> int:
    opts = DnnCertifyOptions(solver=_solver_opts(args), minimizer=_candidate(args, inst),
                             nonneg_row0=not getattr(args, "no_row0", False))
    if args.tol is not None:
        opts = replace(opts, tol=args.tol)
    if args.rtol is not None:
        opts = replace(opts, rtol=args.rtol)
    if args.zeta is not None:
        opts = replace(opts, zeta=args.zeta)
    rep = certify_dnn(inst, opts)
    _emit(dumps(report_dict(rep, "dnn", _meta(args))), args.output)
    return _strict_exit(args, rep.statuses)


def cmd_dnn(args) -> int:
    inst = _load(args.input)
    if not inst.nonneg_vars:
        raise UsageError("dnn needs an instance with nonneg_vars = true")
    return _dnn(args, inst)


def _problem(inst, args):
    if inst.nonneg_vars:
        return build_pdnn(inst, not getattr(args, "no_row0", False)), "dnn"
    return build_primal_sdp(homogenize(inst)), "sdp"


def cmd_relax(args) -> int:
    inst = _load(args.input)
    prob, flavor = _problem(inst, args)
    opts = _solver_opts(args)
    P, D = solve(prob, opts), solve_dual(prob, opts)
    shift = inst.objective_shift
    doc = {"flavor": flavor, "objective_shift": shift,
           "eta_p": jsonable(P.primal_value + shift),
           "eta_d": jsonable(D.dual_value + shift if D.status == Status.OPTIMAL
                             else (float("-inf") if D.status == Status.DUAL_INFEASIBLE_CERTIFIED
                                   else float("nan"))),
           "primal": outcome_dict(P), "dual": outcome_dict(D)}
    if P.status == Status.OPTIMAL and D.status == Status.OPTIMAL:
        c = D.certificate
        mixed = replace(c, X=P.certificate.X)
        doc["kkt_residual"] = jsonable(sdp_kkt_residual(homogenize(inst), mixed))
    meta = _meta(args)
    if meta is not None:
        doc["meta"] = meta
    _emit(dumps(doc), args.output)
    bad = P.status == Status.STALLED or D.status == Status.STALLED
    return EXIT_INCONCLUSIVE if args.strict and bad else EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.input)
    prob, flavor = _problem(inst, args)
    P = solve(prob, _solver_opts(args))
    doc = {"flavor": flavor, "objective_shift": inst.objective_shift,
           "primal": outcome_dict(P, include_trace=args.with_trace)}
    meta = _meta(args)
    if meta is not None:
        doc["meta"] = meta
    if args.trace:
        Path(args.trace).write_text(trace_to_csv(P))
    _emit(dumps(doc), args.output)
    return EXIT_INCONCLUSIVE if args.strict and P.status == Status.STALLED else EXIT_OK


def cmd_sweep(args) -> int:
    if args.example != "4.1":
        raise UsageError("only --example 4.1 has a parameter to sweep")
    if args.step <= 0 or args.to < args.from_:
        raise UsageError("need --step > 0 and --to >= --from")
    lo, hi = bench.ALPHA_RANGE
    if args.from_ < lo or args.to > hi:
        raise UsageError(f"alpha must stay inside [{lo:g}, {hi:g}]")
    rows = bench.sweep_fig1(args.from_, args.to, args.step,
                            CertifyOptions(solver=_solver_opts(args)), jobs=args.jobs)
    text = bench.sweep_to_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    statuses = {f"{r.alpha:g}:{k}": CondStatus(v) for r in rows for k, v in r.statuses.items()}
    return _strict_exit(args, statuses)


def cmd_examples(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, inst in bench.instance_files().items():
        (out / name).write_text(json.dumps(serialize_instance(inst), indent=2) + "\n")
        log.info("wrote %s", out / name)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcqpcert",
                                 description="Global optimality certificates for small QCQPs "
                                             "via SDP and DNN relaxations.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("input", help="problem JSON")
            p.add_argument("-o", "--output", help="write the JSON report here (default stdout)")
        p.add_argument("--strict", action="store_true", help="exit 3 on inconclusive outcomes")
        p.add_argument("--no-meta", action="store_true", help="omit the meta block (command, version, creation time)")
        p.add_argument("--tol-gap", type=_positive, dest="tol_gap")
        p.add_argument("--tol-feas", type=_positive, dest="tol_feas")
        p.add_argument("--max-iters", type=int, dest="max_iters")
        p.add_argument("--precision", choices=("auto", "double", "mp128"))

    def cert_flags(p):
        p.add_argument("--tol", type=_positive, help="absolute residual tolerance")
        p.add_argument("--rtol", type=_positive, help="relative value tolerance")
        p.add_argument("--candidate", type=_vector,
                       help="a known global minimizer, comma separated (feasibility is checked)")
        p.add_argument("--zeta", type=float, help="a known optimal value of the QCQP")

    p = sub.add_parser("certify", help="decide conditions A..F with witnesses")
    common(p)
    cert_flags(p)
    p.add_argument("--no-row0", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("dnn", help="hat-conditions for the DNN relaxation")
    common(p)
    cert_flags(p)
    p.add_argument("--no-row0", action="store_true",
                   help="leave row/column 0 of X free of the sign constraint")
    p.set_defaults(func=cmd_dnn)

    p = sub.add_parser("relax", help="solve the primal and dual relaxation")
    common(p)
    p.add_argument("--no-row0", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("solve", help="solve the primal relaxation only")
    common(p)
    p.add_argument("--trace", help="write the iteration log as CSV")
    p.add_argument("--with-trace", action="store_true", help="include the log in the JSON")
    p.add_argument("--no-row0", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="certify a parametric example over a grid")
    common(p, with_input=False)
    p.add_argument("--example", default="4.1")
    p.add_argument("--from", dest="from_", type=float, default=2.0)
    p.add_argument("--to", type=float, default=6.0)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("examples", help="write the bundled instances as JSON files")
    p.add_argument("--out", default="instances")
    p.set_defaults(func=cmd_examples)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (InstanceError, UsageError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
