"""Command line: ``gptcommit {analyze,generate,solve}``.

Exit codes: 0 pass, 2 parse error, 3 invalid protocol, 4 solver failure,
5 bound violation, 6 impossibility result inapplicable (restricted
effects), 7 oracle mismatch, 8 unsupported theory or scale.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import coneprog, oracles, presets
from .commitment import bob_dual_program, bob_primal_program, repair_dual_point, verify_tradeoff
from .errors import (ContractViolation, GptCommitError, InvalidProtocol, NumericalFailure,
                     ParseError, UnsupportedScale, UnsupportedTheory)
from .protocol_file import (PROGRAM_VERSION, PROTOCOL_VERSION, dumps_program, dumps_protocol,
                            loads_program, loads_protocol)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_SOLVER = 4
EXIT_BOUND = 5
EXIT_INAPPLICABLE = 6
EXIT_ORACLE = 7
EXIT_UNSUPPORTED = 8

_FAILURE_EXIT = {
    "invalid_protocol": EXIT_INVALID,
    "impossibility_inapplicable": EXIT_INAPPLICABLE,
    "solver_failure": EXIT_SOLVER,
    "unsupported": EXIT_UNSUPPORTED,
}

REPORT_VERSION = "gptcommit-report/1"
ORACLE_TOL = 1e-5


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _emit(report: dict, fmt: str, out_path: str | None):
    report = _clean(report)
    if fmt == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        text = "".join(_text_lines(report))
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _text_lines(obj, prefix: str = ""):
    for key, val in obj.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _text_lines(val, name + ".")
        elif isinstance(val, list) and val and not isinstance(val[0], (dict, list)):
            yield f"{name}: {' '.join(_fmt(v) for v in val)}\n"
        else:
            yield f"{name}: {_fmt(val)}\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err.strerror}") from None


# -- oracles --------------------------------------------------------------

def _oracle_check(protocol, result: dict) -> dict:
    """Independent value of Bob's optimum where one is available."""
    b_sys = protocol.factor_b
    rhos = [r.vec for r in protocol.reduced_states()]
    pb = [result["pb_primal"], result["pb_dual"]]
    if b_sys.is_quantum and protocol.n == 2:
        mats = [b_sys.to_matrix(r) for r in rhos]
        value = oracles.helstrom(*mats).value
        lo, hi, method = value - ORACLE_TOL, value + ORACLE_TOL, "helstrom_closed_form"
    elif b_sys.theory == "gbit" and protocol.n <= 4:
        res = oracles.exhaustive_gbit_discrimination(rhos)
        value = res.value
        lo, hi, method = value - ORACLE_TOL, value + res.extra["slack"] + ORACLE_TOL, res.method
    elif not b_sys.is_quantum:
        prog = bob_primal_program(protocol)
        try:
            res = oracles.lp_vertex_enumeration(prog.phi, prog.b, prog.c, prog.cone, prog.sense)
        except UnsupportedScale as err:
            return {"method": "none", "reason": str(err)}
        value = res.value
        lo, hi, method = value - ORACLE_TOL, value + ORACLE_TOL, res.method
    else:
        return {"method": "none", "reason": "no independent oracle for this instance"}
    agree = all(v is not None and lo <= v <= hi for v in pb)
    return {"method": method, "value": value, "accept_low": lo, "accept_high": hi, "agree": agree}


# -- subcommands ----------------------------------------------------------

def cmd_analyze(args) -> int:
    timings = {}
    t0 = time.perf_counter()
    report = {"report_version": REPORT_VERSION, "input": args.path,
              "tolerances": {"solver_tol": args.tol, "max_iter": args.max_iter,
                             "strong_duality": 1e-5, "product": 1e-6, "membership": 1e-8}}
    code = EXIT_OK
    try:
        pf = loads_protocol(_read(args.path))
        protocol = pf.to_protocol()
    except ParseError as err:
        report.update(exit_code=EXIT_PARSE, exit_reason="parse_error", message=str(err))
        _emit(report, args.report, args.out)
        return EXIT_PARSE
    except (InvalidProtocol, ContractViolation) as err:
        report.update(exit_code=EXIT_INVALID, exit_reason="invalid_protocol", message=str(err))
        _emit(report, args.report, args.out)
        return EXIT_INVALID
    timings["parse"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    rep = verify_tradeoff(protocol, args.tol, args.max_iter,
                          exact=False if args.no_exact else None)
    timings["analysis"] = time.perf_counter() - t1
    result = rep.to_dict()
    report["result"] = result

    reason = "pass"
    if rep.failure is not None:
        code, reason = _FAILURE_EXIT.get(rep.failure, EXIT_SOLVER), rep.failure
    elif not rep.product_bound_check:
        code, reason = EXIT_BOUND, "bound_violation"
    elif not all(rep.checks.values()):
        failed = sorted(k for k, v in rep.checks.items() if not v)
        code, reason = EXIT_SOLVER, "check_failed:" + ",".join(failed)

    if args.oracle and rep.failure is None:
        t2 = time.perf_counter()
        report["oracle"] = _oracle_check(protocol, result)
        timings["oracle"] = time.perf_counter() - t2
        if code == EXIT_OK and report["oracle"].get("agree") is False:
            code, reason = EXIT_ORACLE, "oracle_mismatch"

    report["exit_code"] = code
    report["exit_reason"] = reason
    if not args.no_timings:
        report["timings"] = timings
    _emit(report, args.report, args.out)
    return code


_PRESET_PARAMS = {
    "identical": ("n", "dim_b"),
    "classical_orthogonal": ("n",),
    "qubit_helstrom": (),
    "bb84_style": (),
    "random_quantum": ("seed", "dim_a", "dim_b", "n"),
    "gbit_pair": (),
    "restricted": ("n",),
}


def cmd_generate(args) -> int:
    given = {k: getattr(args, k) for k in ("n", "dim_a", "dim_b", "seed") if getattr(args, k) is not None}
    allowed = _PRESET_PARAMS[args.preset]
    bad = sorted(set(given) - set(allowed))
    if bad:
        sys.stderr.write(f"error: preset {args.preset} does not take {', '.join('--' + b.replace('_', '-') for b in bad)}\n")
        return EXIT_PARSE
    try:
        pf = presets.build_preset(args.preset, **given)
        if args.declare_alpha:
            pf.alpha = float(np.min(pf.to_protocol().acceptance()))
    except (InvalidProtocol, ContractViolation) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_INVALID
    text = dumps_protocol(pf)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    report = {"report_version": REPORT_VERSION, "input": args.path,
              "tolerances": {"solver_tol": args.tol, "max_iter": args.max_iter}}
    protocol = None
    try:
        text = _read(args.path)
        try:
            version = json.loads(text).get("version")
        except (json.JSONDecodeError, AttributeError):
            version = None
        if version == PROTOCOL_VERSION:
            if not args.extract:
                raise ParseError("protocol file given; pass --extract bob-primal or bob-dual")
            protocol = loads_protocol(text).to_protocol()
            build = bob_primal_program if args.extract == "bob-primal" else bob_dual_program
            prog = build(protocol)
            report["extracted"] = args.extract
        elif version == PROGRAM_VERSION or version is None:
            prog = loads_program(text)
        else:
            raise ParseError(f"unsupported file version {version!r}")
    except ParseError as err:
        report.update(exit_code=EXIT_PARSE, exit_reason="parse_error", message=str(err))
        _emit(report, args.report, args.out)
        return EXIT_PARSE
    except (InvalidProtocol, ContractViolation) as err:
        report.update(exit_code=EXIT_INVALID, exit_reason="invalid_protocol", message=str(err))
        _emit(report, args.report, args.out)
        return EXIT_INVALID

    if args.write_program:
        with open(args.write_program, "w") as fh:
            fh.write(dumps_program(prog))

    t0 = time.perf_counter()
    sol = coneprog.solve(prog, args.tol, args.max_iter)
    elapsed = time.perf_counter() - t0
    slater = coneprog.check_slater(prog)
    report["solution"] = {
        "status": sol.status, "sense": prog.sense, "primal_value": sol.primal_value,
        "dual_value": sol.dual_value, "gap": sol.gap, "residuals": sol.residuals,
        "iterations": sol.iterations, "slater_point_found": slater is not None,
        "certificate": sol.certificate, "x": sol.x, "y": sol.y,
    }
    if args.extract == "bob-dual" and sol.status == coneprog.OPTIMAL:
        b_sys = protocol.factor_b
        x, shift = repair_dual_point(protocol, sol.x[:b_sys.dim].copy())
        report["solution"]["repaired_value"] = float(b_sys.unit_effect @ x)
        report["solution"]["repair_shift"] = shift
    code = EXIT_SOLVER if sol.status == coneprog.MAX_ITERATIONS else EXIT_OK
    report["exit_code"] = code
    report["exit_reason"] = sol.status
    if not args.no_timings:
        report["timings"] = {"solve": elapsed}
    _emit(report, args.report, args.out)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gptcommit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=coneprog.DEFAULT_TOL, help="solver tolerance")
        p.add_argument("--max-iter", type=int, default=coneprog.DEFAULT_MAX_ITER)
        p.add_argument("--report", choices=("text", "json"), default="text")
        p.add_argument("-o", "--out", help="write the report here instead of stdout")
        p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings")

    a = sub.add_parser("analyze", help="verify the cheating trade-off for a protocol file")
    a.add_argument("path")
    a.add_argument("--oracle", action="store_true", help="cross-check Bob's value independently")
    a.add_argument("--no-exact", action="store_true", help="skip the exact quantum program for Alice")
    common(a)
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("generate", help="write a preset protocol file")
    g.add_argument("preset", choices=sorted(presets.PRESETS))
    g.add_argument("--n", type=int)
    g.add_argument("--dim-a", type=int)
    g.add_argument("--dim-b", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--declare-alpha", action="store_true", help="record the honest acceptance")
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve a cone program file, or one extracted from a protocol")
    s.add_argument("path")
    s.add_argument("--extract", choices=("bob-primal", "bob-dual"))
    s.add_argument("--write-program", help="save the (extracted) program as JSON")
    common(s)
    s.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        sys.stderr.write("error: --tol must be positive\n")
        return EXIT_PARSE
    try:
        return args.func(args)
    except (UnsupportedScale, UnsupportedTheory) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_UNSUPPORTED
    except NumericalFailure as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_SOLVER
    except GptCommitError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
