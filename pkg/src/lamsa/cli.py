"""Command-line interface: ``lamsa {solve,bench,gen,analyze}``.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import glob
import logging
import os
import sys

from .bench import anytime_curves, run_benchmark, write_curves, write_raw_runs
from .estimator import LamAnnealer
from .exceptions import ExecutorError, InstanceParseError
from .rng import RandomSource, seed_derivation
from .scheduling import generate_instance, instance_name, load_instance, load_optima, save_instance
from .schedules import RestartSchedule, expected_speedup, pval0_completion, sequential_completion, speedup_limit

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("lamsa")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _schedule(text):
    try:
        return RestartSchedule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _add_run_flags(p, multi_schedule=False):
    if multi_schedule:
        p.add_argument("--schedule", type=_schedule, action="append", dest="schedules",
                       help="val, pval, pval0 or fal:<len>; repeat for several configurations")
    else:
        p.add_argument("--schedule", type=_schedule, default=RestartSchedule("val"),
                       help="val, pval, pval0 or fal:<len> (default: val)")
    p.add_argument("--instances", type=_positive_int, default=1, help="parallel annealers N")
    budget = p.add_mutually_exclusive_group(required=True)
    budget.add_argument("--budget-secs", type=_positive_float)
    budget.add_argument("--budget-evals", type=_positive_int)
    p.add_argument("--snapshot-every", type=_positive_float,
                   help="snapshot interval (default: 1 s, or budget-evals/60)")
    p.add_argument("--reanneal", action="store_true", help="restart from the global best")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="lamsa", description="Modified Lam simulated annealing with restart schedules.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one scheduling instance")
    p.add_argument("instance", help="instance file")
    _add_run_flags(p)
    p.add_argument("--out", help="write solution and run record here")

    p = sub.add_parser("bench", help="anytime curves over an instance directory")
    p.add_argument("instance_dir")
    p.add_argument("--optima", help="file of '<instance-name> <optimal-cost>' lines")
    _add_run_flags(p, multi_schedule=True)
    p.add_argument("--reps", type=_positive_int, default=10)
    p.add_argument("--checkpoints", help="comma-separated elapsed values (default: every snapshot interval)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gen", help="generate random instances")
    p.add_argument("--jobs", type=_positive_int, required=True)
    p.add_argument("--tightness", type=float, default=0.5)
    p.add_argument("--range", type=float, default=0.5, dest="spread")
    p.add_argument("--setup-ratio", type=float, default=0.5)
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("analyze", help="print schedule lengths, completion times and speedups")
    p.add_argument("--instances", type=_positive_int, required=True)
    p.add_argument("--rmax", type=int, default=3)
    return parser


def _estimator(args, schedule):
    return LamAnnealer(
        schedule=schedule,
        n_instances=args.instances,
        budget_evals=args.budget_evals,
        budget_secs=args.budget_secs,
        snapshot_every=args.snapshot_every,
        reanneal=args.reanneal,
        random_state=args.seed,
    )


def cmd_solve(args, out):
    instance = load_instance(args.instance)
    est = _estimator(args, args.schedule).fit(instance)
    perm = " ".join(str(int(j)) for j in est.best_solution_)
    out.write(f"cost {est.best_cost_}\npermutation {perm}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"# instance {args.instance}\n# schedule {args.schedule} instances {args.instances}\n")
            fh.write(f"cost {est.best_cost_}\npermutation {perm}\n")
            est.record_.write_csv(fh)
    return EXIT_OK


def _checkpoints(args):
    if args.checkpoints:
        return [float(c) if "." in c else int(c) for c in args.checkpoints.split(",")]
    if args.budget_evals is not None:
        every = int(args.snapshot_every or max(1, args.budget_evals // 60))
        points = list(range(every, args.budget_evals + 1, every))
        if points[-1] != args.budget_evals:
            points.append(args.budget_evals)
        return points
    every = args.snapshot_every or 1.0
    count = int(args.budget_secs / every + 1e-9)
    return [round(every * k, 9) for k in range(1, count + 1)]


def _config_label(schedule, args):
    label = str(schedule).replace(":", "-")
    if args.instances > 1:
        label += f"_n{args.instances}"
    if args.reanneal:
        label += "_R"
    return label


def cmd_bench(args, out):
    paths = sorted(glob.glob(os.path.join(args.instance_dir, "*.txt")))
    if not paths:
        raise FileNotFoundError(f"no *.txt instances in {args.instance_dir}")
    instances = {instance_name(p): load_instance(p) for p in paths}
    optima = load_optima(args.optima) if args.optima else {}
    schedules = args.schedules or [RestartSchedule("val")]
    checkpoints = _checkpoints(args)
    os.makedirs(args.out, exist_ok=True)
    for schedule in schedules:
        label = _config_label(schedule, args)
        result = run_benchmark(instances, _estimator(args, schedule), args.reps, optima, base_seed=args.seed)
        rows = anytime_curves(result, checkpoints)
        with open(os.path.join(args.out, f"{label}.csv"), "w", encoding="utf-8") as fh:
            write_curves(rows, fh)
        with open(os.path.join(args.out, f"{label}.runs.csv"), "w", encoding="utf-8") as fh:
            write_raw_runs(result, checkpoints, fh)
        last = rows[-1]
        out.write(f"{label}: checkpoint {last.checkpoint} pctDeltaOpt {last.pct_delta_opt:.4f} "
                  f"pctDeltaOptSum {last.pct_delta_optsum:.4f} numOptimal {last.num_optimal}\n")
        for name, lost in result.eliminated.items():
            if lost:
                log.info("%s: preprocessing eliminated %d jobs", name, lost)
    return EXIT_OK


def cmd_gen(args, out):
    os.makedirs(args.out, exist_ok=True)
    width = max(3, len(str(args.count - 1)))
    for k in range(args.count):
        rng = RandomSource(seed_derivation(args.seed, k, 0))
        instance = generate_instance(args.jobs, args.tightness, args.spread, args.setup_ratio, rng)
        path = os.path.join(args.out, f"inst{k:0{width}d}.txt")
        save_instance(instance, path)
        out.write(path + "\n")
    return EXIT_OK


def cmd_analyze(args, out):
    n = args.instances
    out.write(f"# annealers N={n}, restarts 0..{args.rmax}\n")
    out.write("schedule,instance,restart,length,completion,sequentialCompletion,expectedSpeedup\n")
    for kind in ("pval0", "pval"):
        schedule = RestartSchedule(kind)
        for i in range(n):
            done = 0
            for r in range(args.rmax + 1):
                length = schedule.length(i, r, n)
                done += length
                if kind == "pval0":
                    assert done == pval0_completion(i, r, n)
                r0 = (length // 1000).bit_length() - 1
                out.write(f"{kind},{i},{r},{length},{done},{sequential_completion(r0)},"
                          f"{sequential_completion(r0) / done!r}\n")
    out.write(f"expected speedup for the last annealer at restart {args.rmax}: "
              f"{expected_speedup(n - 1, args.rmax, n)!r}\n")
    out.write(f"limiting speedup: {speedup_limit(n)!r}\n")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "gen": cmd_gen, "analyze": cmd_analyze}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (OSError, InstanceParseError) as exc:
        print(f"lamsa: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"lamsa: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExecutorError, RuntimeError, OverflowError) as exc:
        print(f"lamsa: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
