"""Command line entry point: ``rectpart {partition,trace,bench,profile}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time

from .harness import (
    ALGORITHMS,
    OBJECTIVES,
    IncompatibleError,
    InputOptions,
    bench,
    build_problem,
    check_compatible,
    load_input,
    parse_k,
    performance_profile,
    run_algorithm,
)
from .ingest import PartitionRecord, read_results_csv, write_partition, write_results_csv
from .sgo import OptimizerConfig

log = logging.getLogger("rectpart")


def _add_input_flags(p: argparse.ArgumentParser):
    p.add_argument("--objective", choices=OBJECTIVES, default="rpp2d")
    p.add_argument("--reorder", choices=("none", "degree-asc"), default="none")
    p.add_argument("--upper-triangular", action="store_true", help="keep only entries above the diagonal")
    p.add_argument("--weighted", action="store_true", help="use matrix values as loads instead of 1 per nonzero")


def _add_sgo_flags(p: argparse.ArgumentParser):
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--patience-c", type=float, default=10.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--init", choices=("det", "rand"), default="rand")


def _config(args, seed) -> OptimizerConfig:
    return OptimizerConfig(
        mu=args.mu,
        T=args.T,
        eps=args.eps,
        c=args.patience_c,
        max_iters=args.max_iters,
        seed=seed,
        init_mode="deterministic" if args.init == "det" else "random",
    )


def _opts(args) -> InputOptions:
    return InputOptions(args.reorder, args.upper_triangular, args.weighted)


def _parse_seeds(text: str) -> list[int]:
    if "," in text:
        return [int(s) for s in text.split(",") if s]
    return list(range(int(text)))


def _single_run(args):
    check_compatible(args.objective, args.algorithm, len(args.inputs))
    t0 = time.perf_counter()
    tensors = [load_input(p, _opts(args)) for p in args.inputs]
    problem = build_problem(args.objective, tensors, parse_k(args.k, args.objective))
    build = time.perf_counter() - t0
    out = run_algorithm(problem, args.algorithm, _config(args, args.seed))
    return problem, out, build


def cmd_partition(args) -> int:
    problem, out, build = _single_run(args)
    record = PartitionRecord.create(
        out.partition,
        objective=args.objective,
        algorithm=args.algorithm,
        load=out.load,
        normalized_load=out.normalized_load,
        seed=args.seed if args.algorithm == "sgo" else None,
        iterations=out.iterations,
    )
    if args.out:
        write_partition(record, args.out)
    print(
        f"{args.objective} {args.algorithm} k={'x'.join(map(str, problem.k))} load={out.load} "
        f"normalized_load={out.normalized_load:.4f} iterations={out.iterations} "
        f"time={build + out.seconds:.3f}s"
    )
    return 0


def cmd_trace(args) -> int:
    if args.algorithm != "sgo":
        raise IncompatibleError("trace is only available for the sgo algorithm")
    problem, out, _ = _single_run(args)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "load", "best_load", "gap"])
        for row in out.run.trace:
            w.writerow([row.t, row.load, row.best_load, row.gap])
    finally:
        if fh is not sys.stdout:
            fh.close()
    log.info("stopped after %d iterations (%s)", out.run.iterations, out.run.stop_reason)
    return 0


def cmd_bench(args) -> int:
    instances = {}
    for item in args.instances:
        instances[item] = item.split(":")
    rows = bench(
        instances,
        args.objective,
        args.algorithms,
        args.k,
        _parse_seeds(args.seeds),
        _config(args, 0),
        _opts(args),
        jobs=args.jobs,
    )
    write_results_csv(rows, args.out)
    nerr = sum(r["kind"] == "error" for r in rows)
    print(f"wrote {len(rows)} rows to {args.out} ({nerr} errors)")
    return 0


def cmd_profile(args) -> int:
    rows = read_results_csv(args.results)
    points = performance_profile(rows, args.metric)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "ratio", "fraction"])
        for a, x, f in points:
            w.writerow([a, repr(x), repr(f)])
    print(f"wrote {len(points)} profile points to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rectpart", description="Rectilinear partitioning of sparse matrices and point sets.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (
        ("partition", cmd_partition, "partition one input and write a partition file"),
        ("trace", cmd_trace, "per-iteration load / gap CSV of one sgo run"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("inputs", nargs="+", help=".mtx matrices (two for spgemm3d) or point files")
        p.add_argument("--algorithm", choices=ALGORITHMS, default="sgo")
        p.add_argument("--k", required=True, help="part counts, e.g. 8 or 8,16")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        _add_input_flags(p)
        _add_sgo_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("bench", help="run algorithms over instances and write a results CSV")
    p.add_argument("instances", nargs="+", help="input files; join two with ':' for spgemm3d")
    p.add_argument("--algorithms", nargs="+", choices=ALGORITHMS, default=["sgo", "uni"])
    p.add_argument("--k", nargs="+", default=["8"])
    p.add_argument("--seeds", default="10", help="number of seeds (0..n-1) or a comma list")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_input_flags(p)
    _add_sgo_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="performance-profile step points from a results CSV")
    p.add_argument("results")
    p.add_argument("--metric", default="load", choices=("load", "normalized_load", "wall_time"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IncompatibleError as exc:
        parser.error(str(exc))
    except (OSError, ValueError) as exc:
        print(f"rectpart: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
