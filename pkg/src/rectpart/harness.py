"""Running partitioners over instances and summarizing the results."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import baselines
from .ingest import (
    TIMING_FIELDS,
    read_matrix_market,
    read_points,
    points_to_tensor,
    reorder_degree_ascending,
    upper_triangular,
)
from .loads import SparseTensor
from .problems import Problem, evaluate, make_rpp2d, make_spgemm3d, make_srpp2d, make_tri3d
from .sgo import OptimizerConfig, RunResult, optimize

__all__ = [
    "OBJECTIVES",
    "ALGORITHMS",
    "COMPATIBLE",
    "RANDOMIZED",
    "IncompatibleError",
    "InputOptions",
    "Outcome",
    "check_compatible",
    "load_input",
    "build_problem",
    "run_algorithm",
    "lower_median",
    "bench",
    "performance_profile",
]

log = logging.getLogger(__name__)

OBJECTIVES = ("rpp2d", "srpp2d", "spgemm3d", "tri3d")
ALGORITHMS = ("sgo", "uni", "nic", "pal", "2swp", "4apx", "brute")
COMPATIBLE = {
    "sgo": set(OBJECTIVES),
    "uni": set(OBJECTIVES),
    "brute": set(OBJECTIVES),
    "nic": {"rpp2d"},
    "2swp": {"rpp2d"},
    "4apx": {"rpp2d"},
    "pal": {"srpp2d"},
}
RANDOMIZED = {"sgo"}
ARITY = {"rpp2d": 1, "srpp2d": 1, "tri3d": 1, "spgemm3d": 2}


class IncompatibleError(ValueError):
    pass


def check_compatible(objective: str, algorithm: str, ninputs: int | None = None):
    if objective not in OBJECTIVES:
        raise IncompatibleError(f"unknown objective {objective!r}; choose from {', '.join(OBJECTIVES)}")
    if algorithm not in ALGORITHMS:
        raise IncompatibleError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    if objective not in COMPATIBLE[algorithm]:
        valid = ", ".join(f"{a}:{'/'.join(sorted(o))}" for a, o in COMPATIBLE.items())
        raise IncompatibleError(f"algorithm {algorithm} cannot solve {objective}; valid combinations: {valid}")
    if ninputs is not None and ninputs != ARITY[objective]:
        raise IncompatibleError(f"{objective} takes {ARITY[objective]} input matrix(es), got {ninputs}")


@dataclass(frozen=True)
class InputOptions:
    reorder: str = "none"
    upper_triangular: bool = False
    weighted: bool = False


def load_input(path: str, opts: InputOptions = InputOptions()) -> SparseTensor:
    p = str(path)
    if p.endswith(".mtx"):
        A = read_matrix_market(p, weighted=opts.weighted)
    else:
        A = points_to_tensor(read_points(p))
    if opts.reorder == "degree-asc":
        A = reorder_degree_ascending(A)
    elif opts.reorder != "none":
        raise ValueError(f"unknown reordering {opts.reorder!r}")
    if opts.upper_triangular:
        A = upper_triangular(A)
    return A


def parse_k(text, objective: str) -> tuple[int, ...]:
    d = 3 if objective.endswith("3d") else 2
    ks = tuple(int(x) for x in str(text).split(","))
    if len(ks) == 1:
        ks = ks * d
    if len(ks) != d:
        raise ValueError(f"{objective} needs 1 or {d} part counts, got {text!r}")
    return ks


def build_problem(objective: str, tensors, k: tuple[int, ...]) -> Problem:
    if len(tensors) != ARITY[objective]:
        raise IncompatibleError(f"{objective} takes {ARITY[objective]} input matrix(es), got {len(tensors)}")
    if objective == "rpp2d":
        return make_rpp2d(tensors[0], *k)
    if objective in ("srpp2d", "tri3d"):
        if len(set(k)) != 1:
            raise ValueError(f"{objective} is symmetric and needs one part count, got {k}")
        return (make_srpp2d if objective == "srpp2d" else make_tri3d)(tensors[0], k[0])
    return make_spgemm3d(tensors[0], tensors[1], k)


@dataclass
class Outcome:
    partition: tuple[np.ndarray, ...]
    load: float
    normalized_load: float
    iterations: int
    seconds: float
    run: RunResult | None = None


def run_algorithm(problem: Problem, algorithm: str, config: OptimizerConfig | None = None) -> Outcome:
    check_compatible(problem.name, algorithm)
    config = config or OptimizerConfig()
    t0 = time.perf_counter()
    run = None
    iterations = 0
    if algorithm == "sgo":
        run = optimize(problem, config)
        part, iterations = run.partition, run.iterations
    elif algorithm == "uni":
        part = tuple(baselines.uniform_partition(n, k) for n, k in zip(problem.extents, problem.k))
    elif algorithm == "brute":
        part, _ = baselines.brute_force_optimal(problem)
    else:
        index = problem.terms[0].index
        if algorithm == "pal":
            p = baselines.pal_symmetric(index, problem.k[0])
            part = (p, p.copy())
        else:
            fn = {"nic": baselines.nicol_2d, "2swp": baselines.two_sweep, "4apx": baselines.four_apx}[algorithm]
            res = fn(index, problem.k)
            part, iterations = res.partition, res.sweeps
    seconds = time.perf_counter() - t0
    ev = evaluate(problem, part)
    avg = problem.average_tile_load()
    norm = ev.max_load / avg if avg > 0 else float("nan")
    return Outcome(tuple(np.asarray(p) for p in part), ev.max_load, norm, iterations, seconds, run)


def lower_median(rows: list[dict], key: str = "load") -> dict:
    """Row holding the lower median of ``key``; ties resolved by seed."""
    ordered = sorted(rows, key=lambda r: (float(r[key]), -1 if r["seed"] in ("", None) else int(r["seed"])))
    return ordered[(len(ordered) - 1) // 2]


def _fmt(x):
    if isinstance(x, float):
        return repr(round(x, 12))
    return x


def _run_job(job):
    instance, paths, objective, k, algorithms, seeds, config, opts = job
    rows = []
    base = {"instance": instance, "objective": objective, "k": "x".join(map(str, k))}
    try:
        t0 = time.perf_counter()
        tensors = [load_input(p, opts) for p in paths]
        problem = build_problem(objective, tensors, k)
        build = time.perf_counter() - t0
    except Exception as exc:  # recorded, the bench keeps going
        log.warning("instance %s failed: %s", instance, exc)
        return [dict(base, kind="error", algorithm="", seed="", error=str(exc))]
    for algo in algorithms:
        try:
            check_compatible(objective, algo)
        except IncompatibleError as exc:
            rows.append(dict(base, kind="error", algorithm=algo, seed="", error=str(exc)))
            continue
        runs = []
        for seed in seeds if algo in RANDOMIZED else [None]:
            cfg = replace(config, seed=seed if seed is not None else config.seed)
            try:
                out = run_algorithm(problem, algo, cfg)
            except Exception as exc:
                rows.append(dict(base, kind="error", algorithm=algo, seed="" if seed is None else seed, error=str(exc)))
                continue
            runs.append(
                dict(
                    base,
                    kind="run",
                    algorithm=algo,
                    seed="" if seed is None else seed,
                    load=_fmt(out.load),
                    normalized_load=_fmt(out.normalized_load),
                    iterations=out.iterations,
                    build_time=f"{build:.6f}",
                    partition_time=f"{out.seconds:.6f}",
                    wall_time=f"{build + out.seconds:.6f}",
                    error="",
                )
            )
        rows.extend(runs)
        if runs:
            med = dict(lower_median(runs), kind="median")
            med["wall_time"] = f"{sum(float(r['wall_time']) for r in runs):.6f}"
            rows.append(med)
    return rows


def bench(instances, objective: str, algorithms, ks, seeds, config=None, opts=InputOptions(), jobs: int = 1) -> list[dict]:
    """Raw rows for every run plus one lower-median row per (instance, algorithm, k).

    ``instances`` maps a name to a list of input paths.  The median row of a
    randomized algorithm carries the summed wall time of all its runs.
    """
    config = config or OptimizerConfig()
    work = [
        (name, list(paths), objective, parse_k(k, objective), list(algorithms), list(seeds), config, opts)
        for name, paths in instances.items()
        for k in ks
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_job, work))
    else:
        chunks = [_run_job(w) for w in work]
    return [row for chunk in chunks for row in chunk]


def strip_timing(rows):
    return [{k: v for k, v in r.items() if k not in TIMING_FIELDS} for r in rows]


def performance_profile(rows, metric: str = "load"):
    """Step points ``(algorithm, ratio, fraction)`` of each algorithm's profile.

    Instances are keyed by (instance, objective, k) and compared through
    their median rows.  Instances missing a value for some algorithm are
    dropped with a warning.
    """
    med = [r for r in rows if r.get("kind") == "median"]
    algos = sorted({r["algorithm"] for r in med})
    table: dict = {}
    for r in med:
        table.setdefault((r["instance"], r["objective"], r["k"]), {})[r["algorithm"]] = float(r[metric])
    ratios = {a: [] for a in algos}
    kept = 0
    for key, vals in sorted(table.items()):
        if set(vals) != set(algos):
            log.warning("dropping instance %s: no %s value for %s", key, metric, sorted(set(algos) - set(vals)))
            continue
        best = min(vals.values())
        kept += 1
        for a in algos:
            v = vals[a]
            ratios[a].append(1.0 if v == best else (v / best if best > 0 else float("inf")))
    points = []
    for a in algos:
        rs = sorted(ratios[a])
        for i, x in enumerate(rs):
            if i + 1 < len(rs) and rs[i + 1] == x:
                continue
            points.append((a, x, (i + 1) / kept))
    return points
