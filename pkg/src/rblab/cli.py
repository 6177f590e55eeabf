"""Command-line entry point: ``rblab <subcommand> [flags]``.

Exit codes: 0 success, 1 domain or input error, 2 node budget exhausted,
3 parameter check failed (check-params), 64 usage error.

``--config FILE`` loads a flat JSON object of flag values for the chosen
subcommand (keys are flag names, dashes or underscores). Flags given on the
command line take precedence over the file.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import feasibility, harness, instance_io, moments, satenc, solver
from .core import RBParams, Variant, generate_original, generate_symmetric
from .errors import BudgetExceeded, RBLabError
from .flip import flip_sat_to_unsat, flip_unsat_to_sat

EXIT_OK, EXIT_DOMAIN, EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- flag groups ----------------------------------------------------------------


def _model_flags(sp, r=True, k_default=2):
    sp.add_argument("--n", type=int, help="number of variables")
    sp.add_argument("--alpha", type=float, help="domain exponent, d = round(n^alpha)")
    note = "" if k_default is None else f" (default {k_default})"
    sp.add_argument("--k", type=int, default=k_default, help="constraint arity" + note)
    sp.add_argument("--p", type=float, help="tightness, share of forbidden tuples")
    if r:
        sp.add_argument("--r", type=float, help="constraint density, m = round(r n ln d); experiments default to the calibrated value")


def _exp_flags(sp):
    sp.add_argument("--trials", type=int, default=50, help="trials (default 50)")
    sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (default 1; output is identical)")
    sp.add_argument("--out", help="CSV output path (default stdout)")
    sp.add_argument("--json", help="JSON summary path")


def _budget_flag(sp):
    sp.add_argument("--budget", type=int, help="search node budget (default: $RBLAB_NODE_BUDGET or 1e8)")


REQUIRED = {
    "gen": ["n", "alpha", "p", "r"],
    "solve": ["inp"],
    "count": ["inp"],
    "flip": ["inp"],
    "near-miss": ["inp"],
    "sweep": ["n", "alpha", "p"],
    "flip-exp": ["n", "alpha", "p"],
    "coverage-exp": ["n", "alpha", "p"],
    "moments": ["n", "alpha", "p"],
    "check-params": ["n", "alpha", "k", "p"],
    "encode": ["inp", "out"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rblab", description="Model RB instances, exact solving, flips and experiments.")
    parser.add_argument("--config", help="JSON file of flag values; explicit flags win")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)

    sp = sub.add_parser("gen", help="generate an instance")
    _model_flags(sp)
    sp.add_argument("--seed", type=int, default=0, help="instance seed (default 0)")
    sp.add_argument("--variant", choices=[v.value for v in Variant], default="original",
                    help="original or symmetric (default original)")
    sp.add_argument("--out", help="instance JSON path (default stdout)")

    sp = sub.add_parser("solve", help="decide, count or check uniqueness")
    sp.add_argument("--in", dest="inp", help="instance JSON path")
    sp.add_argument("--mode", choices=[m.value for m in solver.Mode], default="decide",
                    help="decide, count or unique (default decide)")
    sp.add_argument("--out", help="write the result as JSON here")
    _budget_flag(sp)

    sp = sub.add_parser("count", help="exact solution count")
    sp.add_argument("--in", dest="inp", help="instance JSON path")
    sp.add_argument("--oracle", action="store_true", help="count by full enumeration instead of search")
    _budget_flag(sp)

    sp = sub.add_parser("flip", help="apply the tuple-swap flip (k = 2)")
    sp.add_argument("--in", dest="inp", help="instance JSON path")
    sp.add_argument("--direction", choices=["sat-to-unsat", "unsat-to-sat"], default="sat-to-unsat",
                    help="sat-to-unsat needs a unique solution; unsat-to-sat needs a near miss")
    sp.add_argument("--u", type=int, help="constraint to flip, 1-based (unsat-to-sat; default: first that works)")
    sp.add_argument("--out", help="flipped instance JSON path (default stdout)")
    sp.add_argument("--cert", help="certificate JSON path")
    _budget_flag(sp)

    sp = sub.add_parser("near-miss", help="assignment violating only constraint u")
    sp.add_argument("--in", dest="inp", help="instance JSON path")
    sp.add_argument("--u", type=int, default=1, help="constraint index, 1-based (default 1)")
    _budget_flag(sp)

    sp = sub.add_parser("sweep", help="Pr[SAT] against density")
    _model_flags(sp, r=False)
    sp.add_argument("--r-values", help="comma-separated densities")
    sp.add_argument("--r-factors", help="comma-separated multiples of r_cr (default 0.6..1.8 step 0.1)")
    sp.add_argument("--no-count", action="store_true", help="decide only, skip solution counting")
    sp.add_argument("--variant", choices=[v.value for v in Variant], default="original",
                    help="original or symmetric (default original)")
    _exp_flags(sp)
    _budget_flag(sp)

    sp = sub.add_parser("flip-exp", help="flip experiment at calibrated density")
    _model_flags(sp)
    sp.add_argument("--direction", choices=["sat-to-unsat", "unsat-to-sat"], default="sat-to-unsat",
                    help="which flip to run (default sat-to-unsat)")
    sp.add_argument("--max-samples", type=int, help="sampling cap (default 100 x trials)")
    _exp_flags(sp)
    _budget_flag(sp)

    sp = sub.add_parser("coverage-exp", help="coverage by self-unsatisfiable constraints")
    _model_flags(sp)
    sp.add_argument("--max-samples", type=int, help="sampling cap (default 100 x trials)")
    _exp_flags(sp)
    _budget_flag(sp)

    sp = sub.add_parser("moments", help="analytic moments and bounds")
    _model_flags(sp)
    sp.add_argument("--continuous", action="store_true", help="use real d = n^alpha and m = r n ln d")
    sp.add_argument("--out", help="JSON output path (default stdout)")

    sp = sub.add_parser("check-params", help="evaluate the five parameter conditions")
    _model_flags(sp, r=False, k_default=None)
    sp.add_argument("--json", help="JSON report path")

    sp = sub.add_parser("encode", help="log-encode an instance as DIMACS CNF")
    sp.add_argument("--in", dest="inp", help="instance JSON path")
    sp.add_argument("--out", help="DIMACS output path")
    sp.add_argument("--clause-budget", type=int, default=satenc.DEFAULT_CLAUSE_BUDGET,
                    help=f"maximum clause count (default {satenc.DEFAULT_CLAUSE_BUDGET})")
    return parser


# -- argument handling ----------------------------------------------------------


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _option_for(sp, dest):
    for action in sp._actions:
        if action.dest == dest and action.option_strings:
            return action.option_strings[0]
    return "--" + dest


def _apply_config(parser, argv, args):
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"--config: no such file: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError("--config: expected a JSON object")
    sp = _subparser(parser, args.command)
    by_name = {}
    for action in sp._actions:
        for opt in action.option_strings:
            by_name[opt.lstrip("-").replace("-", "_")] = action.dest
    defaults = {}
    for key, value in cfg.items():
        norm = str(key).replace("-", "_")
        if norm in ("help", "config") or norm not in by_name:
            raise UsageError(f"--config: unknown key {key!r} for {args.command}")
        if isinstance(value, (dict, list)):
            raise UsageError(f"--config: key {key!r} must be a scalar")
        defaults[by_name[norm]] = value
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("rblab: a subcommand is required (see --help)")
    if args.config:
        args = _apply_config(parser, argv, args)
    sp = _subparser(parser, args.command)
    missing = [_option_for(sp, d) for d in REQUIRED[args.command] if getattr(args, d, None) is None]
    if missing:
        raise UsageError(f"rblab {args.command}: missing required " + ", ".join(missing))
    for dest in ("inp",):
        value = getattr(args, dest, None)
        if value is not None and not Path(value).is_file():
            raise UsageError(f"--in: no such file: {value}")
    for dest in ("out", "json", "cert"):
        value = getattr(args, dest, None)
        if value is not None and not Path(value).resolve().parent.is_dir():
            raise UsageError(f"--{dest}: directory does not exist: {Path(value).parent}")
    return args


def _write_text(text, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


# -- subcommands ----------------------------------------------------------------


def cmd_gen(a):
    params = RBParams(a.n, a.alpha, a.k, a.p, a.r, a.seed)
    inst = generate_symmetric(params) if a.variant == "symmetric" else generate_original(params)
    _write_text(instance_io.dumps(inst), a.out)
    if a.out:
        print(f"wrote {a.out}: n={inst.n} d={inst.d} k={inst.k} m={inst.m} variant={a.variant}")
    return EXIT_OK


def cmd_solve(a):
    inst = instance_io.load(a.inp)
    res = solver.solve(inst, solver.Mode(a.mode), a.budget)
    doc = {
        "status": res.status.value,
        "count": res.count,
        "witness": instance_io.assignment_to_json(res.witness) if res.witness else None,
        "nodes_expanded": res.nodes_expanded,
    }
    if a.out:
        Path(a.out).write_text(json.dumps(doc, indent=2) + "\n")
    count = "" if res.count is None else f" count={res.count}"
    print(f"{res.status.value}{count} nodes={res.nodes_expanded}")
    return EXIT_OK


def cmd_count(a):
    inst = instance_io.load(a.inp)
    res = solver.enumerate_oracle(inst) if a.oracle else solver.solve(inst, solver.Mode.COUNT_ALL, a.budget)
    print(res.count)
    return EXIT_OK


def cmd_flip(a):
    inst = instance_io.load(a.inp)
    if a.direction == "sat-to-unsat":
        res = solver.solve(inst, solver.Mode.CHECK_UNIQUE, a.budget)
        if res.count != 1:
            what = "no solution" if res.count == 0 else "more than one solution"
            print(f"error: sat-to-unsat needs a unique solution, instance has {what}", file=sys.stderr)
            return EXIT_DOMAIN
        after, cert = flip_sat_to_unsat(inst, res.witness)
    else:
        if solver.solve(inst, solver.Mode.DECIDE, a.budget).sat:
            print("error: unsat-to-sat needs an unsatisfiable instance", file=sys.stderr)
            return EXIT_DOMAIN
        candidates = [a.u - 1] if a.u is not None else range(inst.m)
        after = cert = None
        for u in candidates:
            near = solver.find_near_miss(inst, u, a.budget)
            if near is None:
                continue
            try:
                after, cert = flip_unsat_to_sat(inst, u, near)
                break
            except RBLabError:
                if a.u is not None:
                    raise
        if cert is None:
            print("error: no constraint admits a near miss with a usable tuple pair", file=sys.stderr)
            return EXIT_DOMAIN
    _write_text(instance_io.dumps(after), a.out)
    if a.cert:
        Path(a.cert).write_text(json.dumps(cert.to_dict(), indent=2) + "\n")
    print(f"flipped constraint {cert.u + 1}: a={list(x + 1 for x in cert.a)} b={list(x + 1 for x in cert.b)}",
          file=sys.stderr if not a.out else sys.stdout)
    return EXIT_OK


def cmd_near_miss(a):
    inst = instance_io.load(a.inp)
    near = solver.find_near_miss(inst, a.u - 1, a.budget)
    print(json.dumps(None if near is None else instance_io.assignment_to_json(near)))
    return EXIT_OK


def _experiment_out(a, report, records=None):
    harness.write_csv(records if records is not None else report, a.out or sys.stdout)
    if a.json:
        harness.write_json(report, a.json)


def cmd_sweep(a):
    rcr = moments.r_critical(a.p)
    if a.r_values:
        rs = _floats(a.r_values)
    else:
        factors = _floats(a.r_factors) if a.r_factors else [round(0.6 + 0.1 * i, 10) for i in range(13)]
        rs = [f * rcr for f in factors]
    records = harness.sweep(a.n, a.alpha, a.k, a.p, rs, a.trials, a.seed, jobs=a.jobs,
                            count=not a.no_count, variant=Variant(a.variant), budget=a.budget)
    cross = harness.crossing_point(records)
    summary = {
        "r_cr": rcr,
        "crossing_r": cross,
        "crossing_over_r_cr": None if cross is None else cross / rcr,
        "violated_conditions": harness.violated_conditions(a.n, a.alpha, a.k, a.p),
        "records": [vars(r) for r in records],
    }
    harness.write_csv(records, a.out or sys.stdout)
    if a.json:
        harness.write_json(summary, a.json)
    if a.out:
        where = "none in range" if cross is None else f"{cross:.4f} ({cross / rcr:.3f} r_cr)"
        print(f"sweep: {len(records)} densities x {a.trials} trials, Pr[SAT] = 1/2 crossing {where}")
    return EXIT_OK


def cmd_flip_exp(a):
    fn = harness.flip_experiment_sat_to_unsat if a.direction == "sat-to-unsat" else harness.flip_experiment_unsat_to_sat
    rep = fn(a.n, a.alpha, a.k, a.p, a.trials, a.seed, max_samples=a.max_samples, jobs=a.jobs, r=a.r,
             budget=a.budget)
    _experiment_out(a, rep)
    if a.out:
        print(f"flip-exp {rep.direction}: {rep.flip_found}/{rep.attempted} flipped, "
              f"unsat after {rep.unsat_after_flip}, sat after {rep.sat_after_flip}")
    return EXIT_OK


def cmd_coverage_exp(a):
    rep = harness.coverage_experiment(a.n, a.alpha, a.k, a.p, a.trials, a.seed, r=a.r,
                                      max_samples=a.max_samples, jobs=a.jobs, budget=a.budget)
    _experiment_out(a, rep)
    if a.out:
        print(f"coverage-exp: {rep.fully_covered}/{rep.instances} fully covered, bound complement "
              f"{rep.bound_complement:.4g}")
    return EXIT_OK


def cmd_moments(a):
    r = a.r if a.r is not None else moments.calibrate_r(a.n, a.alpha, a.p)[0]
    if a.continuous:
        point = moments.ModelPoint.continuous(a.n, a.alpha, a.k, a.p, r)
    else:
        point = RBParams(a.n, a.alpha, a.k, a.p, r)
    doc = moments.moment_report(point).to_dict()
    clean = {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in doc.items()}
    _write_text(json.dumps(clean, indent=2) + "\n", a.out)
    if a.out:
        print(f"moments: E[X]={doc['e_x']:.6g} E[X^2]={doc['e_x2']:.6g} -> {a.out}")
    return EXIT_OK


def cmd_check_params(a):
    rep = feasibility.check(a.n, a.alpha, a.k, a.p)
    print(rep.table())
    if a.json:
        harness.write_json(rep.to_dict(), a.json)
    return EXIT_OK if rep.passed else EXIT_INFEASIBLE


def cmd_encode(a):
    inst = instance_io.load(a.inp)
    cnf = satenc.encode(inst, a.clause_budget)
    satenc.write_dimacs(cnf, a.out)
    print(f"wrote {a.out}: {cnf.num_vars} variables, {cnf.num_clauses} clauses")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "count": cmd_count,
    "flip": cmd_flip,
    "near-miss": cmd_near_miss,
    "sweep": cmd_sweep,
    "flip-exp": cmd_flip_exp,
    "coverage-exp": cmd_coverage_exp,
    "moments": cmd_moments,
    "check-params": cmd_check_params,
    "encode": cmd_encode,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (RBLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
