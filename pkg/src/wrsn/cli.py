"""``wrsn`` command line: gen, solve, eval, bench, report.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 invariant
violation inside a solver.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench
from .evaluation import ChargingSchedule, evaluate_schedule
from .instances import DISTRIBUTIONS, GeneratorSpec, benchmark_suite, generate_instance
from .model import (RESULT_COLUMNS, SchemaError, load_instance, load_schedule, read_results, save_instance, save_schedule,
                    write_results)
from .solvers import ALGORITHMS, InvariantError, SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _algo_list(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    for a in algos:
        if a not in ALGORITHMS:
            raise argparse.ArgumentTypeError(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    return algos


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="weight of the dead-node term (overrides the instance)")
    p.add_argument("--path-evals", type=_positive_int, default=25000)
    p.add_argument("--time-evals", type=_positive_int, default=25000)
    p.add_argument("--pop", type=_positive_int, default=100, help="population size of both levels")
    p.add_argument("--init", choices=("greedy", "random"), default="greedy")
    p.add_argument("--no-transfer", action="store_true", help="disable incumbent exchange between tasks")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wrsn", description="Mobile-charger scheduling for rechargeable sensor networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate instance files")
    g.add_argument("--dist", choices=tuple(DISTRIBUTIONS), default="uniform")
    g.add_argument("--n", type=_positive_int, default=50)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--all", action="store_true", help="the full suite: 3 distributions x n=25..100 x 10 orders")
    g.add_argument("--p-policy", choices=("uniform", "routing"), default="uniform")
    g.add_argument("--period", default="round", help="'round', 'budget' or seconds")
    g.add_argument("--out", default=".", help="output directory")

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--algo", choices=ALGORITHMS, default="mtbcs")
    s.add_argument("--seed", type=int, default=1)
    _add_solver_flags(s)
    s.add_argument("--out", help="results CSV to append to (stdout when omitted)")
    s.add_argument("--trace", help="write the eval_count,best_f trace here")
    s.add_argument("--schedule", help="write the best schedule here")

    e = sub.add_parser("eval", help="evaluate a schedule file")
    e.add_argument("--instance", required=True)
    e.add_argument("--schedule", required=True)
    e.add_argument("--alpha", type=float)

    b = sub.add_parser("bench", help="batch runs into a results CSV")
    b.add_argument("--instance", nargs="+", required=True)
    b.add_argument("--algo", type=_algo_list, default=list(ALGORITHMS), help="comma-separated")
    b.add_argument("--seed", type=_int_list, default=[1], help="comma-separated seeds")
    _add_solver_flags(b)
    b.add_argument("--sweep", action="append", default=[], help="KEY=v1,v2,... (repeatable)")
    b.add_argument("--out", required=True)

    r = sub.add_parser("report", help="mean dead ratio per sweep value and algorithm")
    r.add_argument("--results", required=True)
    r.add_argument("--out")
    return parser


def _check_alpha(alpha) -> None:
    if alpha is not None and not 0.0 <= alpha <= 1.0:
        raise UsageError(f"--alpha must lie in [0, 1], got {alpha}")


def _config(args) -> SolverConfig:
    _check_alpha(args.alpha)
    return SolverConfig(path_evals=args.path_evals, time_evals=args.time_evals, pop_path=args.pop,
                        pop_time=args.pop, alpha=args.alpha, init=args.init, transfer=not args.no_transfer)


def _period(text: str):
    if text in ("round", "budget"):
        return text
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--period must be 'round', 'budget' or a number, got {text!r}") from None


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    common = {"p_policy": args.p_policy, "T_policy": _period(args.period)}
    insts = benchmark_suite(**common) if args.all else [
        generate_instance(GeneratorSpec(distribution=args.dist, n=args.n, seed=args.seed, **common))]
    for inst in insts:
        path = save_instance(inst, out / f"{inst.name}.json")
        print(path)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    res = solve(args.algo, inst, _config(args), args.seed)
    row = bench.result_row(res, inst, args.seed)
    if args.out:
        write_results([row], args.out, append=True)
    else:
        print(",".join(RESULT_COLUMNS))
        print(",".join(row.as_strings()))
    if args.trace:
        bench.write_trace(res.history, args.trace)
    if args.schedule:
        save_schedule(res.schedule.path, res.schedule.times, args.schedule, inst.name)
    return EXIT_OK


def cmd_eval(args) -> int:
    inst = load_instance(args.instance)
    if args.alpha is not None:
        _check_alpha(args.alpha)
        inst = replace(inst, alpha=args.alpha)
    ids, times = load_schedule(args.schedule)
    try:
        rep = evaluate_schedule(ChargingSchedule(ids, times), inst)
    except ValueError as exc:
        raise SchemaError(f"{args.schedule}: {exc}") from exc
    doc = {
        "instance": inst.name,
        "objective": rep.objective,
        "dead_ratio_percent": round(100 * rep.dead_ratio, 2),
        "dead": [int(s) for s in rep.path[rep.z]],
        "T_travel": rep.T_travel,
        "T_charge": rep.T_charge,
        "E_move": rep.E_move,
        "E_charge": rep.E_charge,
        "feasible": rep.feasible,
        "violations": [{"constraint": v.constraint, "slack": v.slack, "sensor": v.sensor} for v in rep.violations],
        "arrival": rep.arrival.tolist(),
        "e_at_arrival": rep.e_at_arrival.tolist(),
        "e_at_depot": np.asarray(rep.e_at_depot).tolist(),
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sweeps = [bench.parse_sweep(s) for s in args.sweep]
        workers = bench.worker_count()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    instances = [load_instance(p) for p in args.instance]
    names = [i.name for i in instances]
    if len(set(names)) != len(names):
        raise UsageError("instance names must be distinct")
    config = _config(args)
    rows = bench.run_bench(instances, args.algo, args.seed, config, sweeps, threads=workers)
    write_results(rows, args.out)
    bench.write_meta(Path(str(args.out) + ".meta.json"), config, sweeps, instances)
    print(f"{len(rows)} rows -> {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    text = bench.write_report(bench.aggregate(read_results(args.results)), args.out)
    print(text, end="")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "eval": cmd_eval, "bench": cmd_bench, "report": cmd_report}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SchemaError, json.JSONDecodeError) as exc:
        print(f"wrsn: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantError as exc:
        print(f"wrsn: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
