"""Subgradient optimizer for (constrained) rectilinear partitioning.

Cut positions are optimized in load space: every constraint group keeps a
monotone parameter array ``pi`` with values in ``[0, L]`` where ``L`` is the
group's total prefix load, and the index-space partition is recovered by
inverting the group's averaged prefix sum.  Each iteration computes the slab
maxima of the tile loads, turns them into a subgradient, takes a diminishing
step and keeps the best partition seen.

Setting ``OptimizerConfig.exact`` runs the parameter arithmetic on
:class:`fractions.Fraction` objects, which is slow but reproduces hand
calculations bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .problems import ConstraintSpec, Problem, evaluate, tile_loads

__all__ = [
    "OptimizerConfig",
    "Parametrization",
    "TraceRow",
    "RunResult",
    "group_prefix",
    "init_parameters",
    "parameters_from_partition",
    "slab_maxima",
    "group_maxima",
    "subgradient",
    "step_size",
    "apply_update",
    "materialize_partition",
    "optimality_gap",
    "optimize",
    "tile_loads",
]

log = logging.getLogger(__name__)

INIT_MODES = ("deterministic", "random")


@dataclass(frozen=True)
class OptimizerConfig:
    mu: float = 1.0
    T: float = 100.0
    eps: float = 1e-3
    c: float = 10.0
    max_iters: int = 100_000
    seed: int | None = 0
    init_mode: str = "random"
    # fixed step size instead of the diminishing schedule; used to replay hand examples
    eta: float | None = None
    exact: bool = False

    def __post_init__(self):
        if self.mu <= 0 or self.T <= 0 or self.eps <= 0:
            raise ValueError("mu, T and eps must be positive")
        if self.c < 1:
            raise ValueError(f"patience factor c must be >= 1, got {self.c}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        if self.eta is not None and self.eta <= 0:
            raise ValueError("a forced step size must be positive")


@dataclass
class Parametrization:
    pi: list[np.ndarray]
    t: int = 0
    best_pi: list[np.ndarray] | None = None
    best_load: float = math.inf


class TraceRow(NamedTuple):
    t: int
    load: float
    best_load: float
    gap: float


@dataclass
class RunResult:
    partition: tuple[np.ndarray, ...]
    load: float
    iterations: int
    stop_reason: str
    trace: list[TraceRow] = field(default_factory=list)
    pi: list[np.ndarray] | None = None
    best_pi: list[np.ndarray] | None = None
    degenerate: bool = False
    seed: int | None = None


def _as_fractions(arr) -> np.ndarray:
    return np.array([Fraction(v.item() if hasattr(v, "item") else v) for v in np.ravel(arr)], dtype=object)


def group_prefix(problem: Problem, exact: bool = False) -> list[np.ndarray]:
    """Averaged prefix sum of every constraint group."""
    out = []
    for g in problem.constraints.groups:
        if exact:
            acc = sum(_as_fractions(problem.prefix(i)) for i in g)
            out.append(acc / len(g))
        elif len(g) == 1:
            out.append(problem.prefix(g[0]))
        else:
            out.append(sum(problem.prefix(i) for i in g) / len(g))
    return out


def init_parameters(problem: Problem, config: OptimizerConfig, rng=None) -> Parametrization:
    prefixes = group_prefix(problem, config.exact)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    pis = []
    for F, k in zip(prefixes, problem.constraints.parts):
        L = F[-1]
        if config.init_mode == "deterministic":
            if config.exact:
                pi = np.array([Fraction(L) * j / k for j in range(k + 1)], dtype=object)
            else:
                pi = np.arange(k + 1) * (float(L) / k)
        else:
            interior = np.sort(rng.uniform(0.0, float(L), size=k - 1))
            pi = np.concatenate([[0.0], interior, [float(L)]])
            if config.exact:
                pi = _as_fractions(pi)
        pi[0], pi[-1] = 0, L
        pis.append(pi)
    return Parametrization(pis)


def parameters_from_partition(problem: Problem, partition, exact: bool = False) -> list[np.ndarray]:
    """Parameters that reproduce a given (constraint-respecting) partition."""
    parts = problem.check_partition(partition)
    pis = []
    for g, F in zip(problem.constraints.groups, group_prefix(problem, exact)):
        p = parts[g[0]]
        if any(not np.array_equal(parts[i], p) for i in g[1:]):
            raise ValueError(f"dimensions {g} are constrained equal but the given partition arrays differ")
        pi = F[p]
        pis.append(pi.astype(object) if exact else pi.astype(np.float64))
    return pis


def slab_maxima(tiles: np.ndarray, dim: int) -> np.ndarray:
    """Largest tile load among the tiles whose ``dim`` coordinate is j, for every j."""
    tiles = np.asarray(tiles)
    axes = tuple(a for a in range(tiles.ndim) if a != dim)
    return tiles.max(axis=axes) if axes else tiles.copy()


def group_maxima(r_arrays, spec: ConstraintSpec) -> list[np.ndarray]:
    out = []
    for g, k in zip(spec.groups, spec.parts):
        rs = [np.asarray(r_arrays[i]) for i in g]
        if any(len(r) != k for r in rs):
            raise ValueError(f"slab maxima of group {g} must all have length {k}, got {[len(r) for r in rs]}")
        out.append(np.maximum.reduce(rs))
    return out


def subgradient(r, k: int | None = None, exact: bool = False) -> np.ndarray:
    """``g[j] = sum(r[:j]) - j/k * sum(r)``; zero at both ends.

    The formula is invariant to shifting ``r`` by a constant, so ``r`` is
    shifted by its minimum first: equal slab maxima then give an exactly
    zero subgradient in floating point too.
    """
    r = np.asarray(r)
    k = len(r) if k is None else k
    if len(r) != k:
        raise ValueError(f"r has length {len(r)}, expected {k}")
    if exact:
        rr = [Fraction(v.item() if hasattr(v, "item") else v) for v in r]
        base = min(rr)
        rr = [v - base for v in rr]
        total = sum(rr, Fraction(0))
        csum = [Fraction(0)]
        for v in rr:
            csum.append(csum[-1] + v)
        return np.array([csum[j] - total * j / k for j in range(k + 1)], dtype=object)
    rr = r.astype(np.float64) - r.min()
    csum = np.concatenate([[0.0], np.cumsum(rr)])
    g = csum - np.arange(k + 1) * (csum[-1] / k)
    g[0] = g[-1] = 0.0
    return g


def step_size(t: int, k: int, config: OptimizerConfig) -> float:
    """Diminishing step ``mu / sqrt(t / k + T)``."""
    return config.mu / math.sqrt(t / k + config.T)


def apply_update(pi, g, eta) -> np.ndarray:
    """``pi - eta * g`` with the interior clamped to ``[0, L]`` and re-sorted."""
    pi = np.asarray(pi)
    g = np.asarray(g)
    if pi.shape != g.shape:
        raise ValueError(f"pi and g shapes differ: {pi.shape} vs {g.shape}")
    L = pi[-1]
    new = pi - eta * g
    interior = np.sort(np.minimum(np.maximum(new[1:-1], 0), L))
    new[1:-1] = interior
    new[0], new[-1] = pi[0], L
    return new


def materialize_partition(pis, prefixes, spec: ConstraintSpec, extents) -> tuple[np.ndarray, ...]:
    """Index-space partition arrays for every dimension."""
    out: list[np.ndarray | None] = [None] * spec.d
    for g, pi, F in zip(spec.groups, pis, prefixes):
        n = extents[g[0]]
        x = np.searchsorted(F, pi, side="right").astype(np.int64) - 1
        x = np.clip(x, 0, n)
        x[0], x[-1] = 0, n
        x = np.maximum.accumulate(x)
        for i in g:
            out[i] = x.copy()
    return tuple(out)


def optimality_gap(rhat_arrays) -> float:
    """``(max - min) / min`` over all slab maxima; infinite when the min is zero."""
    hi = max(np.max(r) for r in rhat_arrays)
    lo = min(np.min(r) for r in rhat_arrays)
    if lo <= 0:
        return math.inf
    return float((hi - lo) / lo)


def _uniform_partition(problem: Problem) -> tuple[np.ndarray, ...]:
    return tuple(np.arange(k + 1) * n // k for n, k in zip(problem.extents, problem.k))


def optimize(problem: Problem, config: OptimizerConfig | None = None, initial_partition=None) -> RunResult:
    """Run the subgradient optimizer and return the best partition found.

    Stops when the optimality gap drops below ``eps``, when the best load has
    not improved by more than a factor ``1 + eps`` for ``c * sum(k)``
    iterations (``k`` counted once per constraint group), or after
    ``max_iters`` updates.
    """
    config = config or OptimizerConfig()
    spec = problem.constraints

    if problem.total_load == 0:
        p = _uniform_partition(problem)
        return RunResult(p, 0, 0, "degenerate", [], degenerate=True, seed=config.seed)

    prefixes = group_prefix(problem, config.exact)
    if initial_partition is not None:
        pis = parameters_from_partition(problem, initial_partition, config.exact)
        part = problem.check_partition(initial_partition)
    else:
        pis = init_parameters(problem, config).pi
        part = materialize_partition(pis, prefixes, spec, problem.extents)

    tiles = tile_loads(problem, part)
    load = tiles.max().item()
    best_load, best_part, best_pi = load, part, [p.copy() for p in pis]
    anchor, last_improve = load, 0
    window = config.c * sum(spec.parts)
    trace: list[TraceRow] = []
    t = 0
    while True:
        r = [slab_maxima(tiles, i) for i in range(problem.d)]
        rhat = group_maxima(r, spec)
        gap = optimality_gap(rhat)
        trace.append(TraceRow(t, load, best_load, gap))
        if gap < config.eps:
            reason = "converged"
            break
        if t - last_improve >= window:
            reason = "patience"
            break
        if t >= config.max_iters:
            reason = "max_iters"
            break
        new_pis = []
        for pi, rh, k in zip(pis, rhat, spec.parts):
            g = subgradient(rh, k, exact=config.exact)
            eta = config.eta if config.eta is not None else step_size(t, k, config)
            if config.exact:
                eta = Fraction(eta)
            new_pis.append(apply_update(pi, g, eta))
        pis = new_pis
        part = materialize_partition(pis, prefixes, spec, problem.extents)
        tiles = tile_loads(problem, part)
        load = tiles.max().item()
        t += 1
        if load < best_load:
            best_load, best_part, best_pi = load, part, [p.copy() for p in pis]
        if load * (1 + config.eps) < anchor:
            anchor, last_improve = load, t

    final = evaluate(problem, best_part).max_load
    log.debug("sgo %s k=%s: %d iterations, load %s (%s)", problem.name, problem.k, t, final, reason)
    return RunResult(best_part, final, t, reason, trace, pis, best_pi, seed=config.seed)
