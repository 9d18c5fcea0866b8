"""Comparison partitioners and a brute-force oracle.

* ``uniform_partition``: equal-width cuts (UNI).
* ``probe_1d`` / ``optimal_1d``: greedy probe and exact 1-D bottleneck search.
* ``nicol_2d``: alternate conditionally optimal row and column partitions (NIC).
* ``two_sweep``: the same, stopped after one row and one column sweep (2SWP).
* ``pal_symmetric``: probe-a-load symmetric partitioning (PAL).
* ``four_apx``: iterative reweighting 4-approximation (4APX).
* ``brute_force_optimal``: exhaustive search for tiny instances.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .loads import RectIndex
from .problems import Problem, tile_loads

__all__ = [
    "Partition2D",
    "BudgetExceeded",
    "uniform_partition",
    "prefix_of",
    "probe_1d",
    "optimal_1d",
    "bottleneck_1d",
    "conditional_optimal",
    "nicol_2d",
    "two_sweep",
    "pal_symmetric",
    "four_apx",
    "brute_force_optimal",
]

log = logging.getLogger(__name__)

# relative precision of the bisection over real-valued targets
REL_TOL = 1e-9
# interval-sum candidates are enumerated when the array is at most this long
SMALL_N = 64
FLOAT_SLACK = 1e-12
# 4APX answers tile queries from a dense 2-D prefix array up to this many cells
DENSE_LIMIT = 1 << 22


class BudgetExceeded(ValueError):
    pass


@dataclass
class Partition2D:
    rows: np.ndarray
    cols: np.ndarray
    load: float
    sweeps: int = 0
    accepted_target: float | None = None

    @property
    def partition(self):
        return (self.rows, self.cols)


def uniform_partition(n: int, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return np.arange(k + 1, dtype=np.int64) * n // k


def prefix_of(costs) -> np.ndarray:
    costs = np.asarray(costs)
    return np.concatenate([np.zeros(1, costs.dtype), np.cumsum(costs)])


def bottleneck_1d(prefix, cuts):
    return np.diff(np.asarray(prefix)[np.asarray(cuts)]).max().item()


def _greedy(prefix: np.ndarray, k: int, target):
    n = len(prefix) - 1
    if prefix.dtype.kind == "f":
        # prefix[a] + (prefix[b] - prefix[a]) may round below prefix[b]
        target = target + FLOAT_SLACK * abs(prefix[-1])
    cuts = np.full(k + 1, n, dtype=np.int64)
    cuts[0] = start = 0
    for j in range(1, k + 1):
        if start == n:
            return True, cuts
        end = int(np.searchsorted(prefix, prefix[start] + target, side="right")) - 1
        if end <= start:
            return False, cuts
        cuts[j] = start = end
    return start == n, cuts


def probe_1d(prefix, k: int, target):
    """Can the items be split into ``k`` consecutive parts of cost <= target?

    Every part greedily takes the longest run that fits.  Returns
    ``(feasible, cuts)``; on failure ``cuts`` holds the partial greedy trace.
    """
    return _greedy(np.asarray(prefix), k, target)


def _candidate_targets(prefix: np.ndarray) -> np.ndarray:
    return np.unique(prefix[None, :] - prefix[:, None])


@functools.lru_cache(maxsize=64)
def _dp_tables(n: int):
    return np.tri(n + 1, k=-1, dtype=bool), np.arange(n + 1)


def _optimal_1d_dp(prefix: np.ndarray, k: int) -> np.ndarray:
    """Exact min-bottleneck cuts by dynamic programming, O(k n^2)."""
    n = len(prefix) - 1
    below, cols = _dp_tables(n)
    cost = prefix[None, :] - prefix[:, None]
    cost[below] = np.inf
    best = cost[0].copy()
    args = []
    for _ in range(1, k):
        both = np.maximum(best[:, None], cost)
        arg = both.argmin(axis=0)
        best = both[arg, cols]
        args.append(arg)
    cuts = np.empty(k + 1, dtype=np.int64)
    cuts[k] = end = n
    for j in range(k - 1, 0, -1):
        end = cuts[j] = args[j - 1][end]
    cuts[0] = 0
    return cuts


def optimal_1d(prefix, k: int) -> np.ndarray:
    """Cuts of a minimum-bottleneck partition of the items into ``k`` parts."""
    prefix = np.asarray(prefix)
    n = len(prefix) - 1
    if n == 0 or prefix[-1] == 0:
        return uniform_partition(n, k)
    costs = np.diff(prefix)
    lower = max(prefix[-1] / k, costs.max())
    if prefix.dtype.kind in "iu":
        lo, hi = int(math.ceil(lower)), int(prefix[-1])
        while lo < hi:
            mid = (lo + hi) // 2
            if _greedy(prefix, k, mid)[0]:
                hi = mid
            else:
                lo = mid + 1
        return _greedy(prefix, k, hi)[1]
    if n <= SMALL_N:
        cand = _candidate_targets(prefix)
        cand = cand[cand >= lower * (1 - REL_TOL)]
        lo, hi = 0, len(cand) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if _greedy(prefix, k, cand[mid])[0]:
                hi = mid
            else:
                lo = mid + 1
        return _greedy(prefix, k, cand[hi])[1]
    lo, hi = float(lower), float(prefix[-1])
    while hi - lo > REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if _greedy(prefix, k, mid)[0]:
            hi = mid
        else:
            lo = mid
    return _greedy(prefix, k, hi)[1]


class _StripCosts:
    """Costs of intervals along one axis given a fixed partition of the other.

    The cost of ``[a, b)`` is the heaviest of the rectangles it forms with the
    fixed strips.  Entries are keyed by ``(strip, coordinate)`` so the longest
    interval under a target is one vectorized search per part.
    """

    def __init__(self, coords, others, weights, n, fixed):
        fixed = np.asarray(fixed, dtype=np.int64)
        self.n = n
        self.nstrips = len(fixed) - 1
        strip = np.searchsorted(fixed, others, side="right") - 1
        key = strip * (n + 1) + coords
        order = np.argsort(key, kind="stable")
        self.keys = key[order]
        self.cum = np.concatenate([np.zeros(1, weights.dtype), np.cumsum(weights[order])])
        self.base = np.arange(self.nstrips, dtype=np.int64) * (n + 1)
        self.strip_start = np.searchsorted(self.keys, self.base, side="left")
        self.strip_total = self.cum[np.searchsorted(self.keys, self.base + n + 1, side="left")] - self.cum[self.strip_start]
        self.integral = weights.dtype.kind in "iu"

    def below(self, x):
        """Per-strip weight with coordinate < x."""
        return self.cum[np.searchsorted(self.keys, self.base + x, side="left")] - self.cum[self.strip_start]

    def interval_cost(self, a, b):
        return (self.below(b) - self.below(a)).max().item()

    def longest(self, start, target):
        thr = self.below(start) + target
        # first entry whose running strip weight exceeds the threshold bounds the interval
        pos = np.searchsorted(self.cum, self.cum[self.strip_start] + thr, side="right") - 1
        ends = np.full(self.nstrips, self.n, dtype=np.int64)
        inside = pos < len(self.keys)
        inside &= self.keys[np.minimum(pos, len(self.keys) - 1)] < self.base + self.n + 1
        ends[inside] = self.keys[pos[inside]] - self.base[inside]
        return int(min(ends.min(), self.n))

    def probe(self, k, target):
        cuts = np.full(k + 1, self.n, dtype=np.int64)
        cuts[0] = start = 0
        for j in range(1, k + 1):
            if start == self.n:
                return True, cuts
            end = self.longest(start, target)
            if end <= start:
                return False, cuts
            cuts[j] = start = end
        return start == self.n, cuts

    def optimal(self, k):
        if self.nstrips == 0 or self.strip_total.max() == 0:
            return uniform_partition(self.n, k)
        top = self.strip_total.max().item()
        if self.integral:
            lo, hi = int(math.ceil(top / k)), int(top)
            while lo < hi:
                mid = (lo + hi) // 2
                if self.probe(k, mid)[0]:
                    hi = mid
                else:
                    lo = mid + 1
        else:
            lo, hi = top / k, float(top)
            while hi - lo > REL_TOL * hi:
                mid = 0.5 * (lo + hi)
                if self.probe(k, mid)[0]:
                    hi = mid
                else:
                    lo = mid
        return self.probe(k, hi)[1]


def conditional_optimal(index: RectIndex, fixed, k: int, axis: int) -> np.ndarray:
    """Optimal partition of ``axis`` (0 rows, 1 cols) given the other axis' cuts."""
    t = index.tensor
    rows, cols = t.indices[:, 0], t.indices[:, 1]
    if axis == 0:
        sc = _StripCosts(rows, cols, t.weights, t.dims[0], fixed)
    else:
        sc = _StripCosts(cols, rows, t.weights, t.dims[1], fixed)
    return sc.optimal(k)


def _max_load(index: RectIndex, rows, cols):
    return index.grid(rows, cols).max().item()


def nicol_2d(index: RectIndex, k, max_sweeps: int = 20) -> Partition2D:
    """Alternate conditional optima, starting from a uniform column partition.

    A conditional step is kept only if it lowers the bottleneck; the run ends
    once a row step and a column step in a row both fail to improve, or after
    ``max_sweeps`` row+column sweeps.
    """
    k1, k2 = k
    n, m = index.shape
    rows, cols = uniform_partition(n, k1), uniform_partition(m, k2)
    load = _max_load(index, rows, cols)
    stale = steps = 0
    while steps < 2 * max_sweeps and stale < 2:
        if steps % 2 == 0:
            cand_rows, cand_cols = conditional_optimal(index, cols, k1, axis=0), cols
        else:
            cand_rows, cand_cols = rows, conditional_optimal(index, rows, k2, axis=1)
        cand = _max_load(index, cand_rows, cand_cols)
        # the very first row step always replaces the arbitrary uniform rows
        if cand < load or steps == 0:
            stale = 0 if cand < load else 1
            rows, cols, load = cand_rows, cand_cols, cand
        else:
            stale += 1
        steps += 1
    return Partition2D(rows, cols, load, sweeps=(steps + 1) // 2)


def two_sweep(index: RectIndex, k) -> Partition2D:
    """One row sweep then one column sweep from a uniform start."""
    k1, k2 = k
    n, m = index.shape
    rows = conditional_optimal(index, uniform_partition(m, k2), k1, axis=0)
    cols = conditional_optimal(index, rows, k2, axis=1)
    return Partition2D(rows, cols, _max_load(index, rows, cols), sweeps=1)


def _pal_probe(index: RectIndex, k: int, target):
    n = index.shape[0]
    cuts = [0]
    while cuts[-1] < n:
        if len(cuts) > k:
            return False, None
        s = cuts[-1]
        prev = np.asarray(cuts, dtype=np.int64)

        def fits(c):
            strip_r = index.dominance(c, prev) - index.dominance(s, prev)
            strip_c = index.dominance(prev, c) - index.dominance(prev, s)
            diag = index.query(s, c, s, c)
            return diag <= target and np.all(np.diff(strip_r) <= target) and np.all(np.diff(strip_c) <= target)

        lo, hi = s, n
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if fits(mid):
                lo = mid
            else:
                hi = mid - 1
        if lo == s:
            return False, None
        cuts.append(lo)
    out = np.full(k + 1, n, dtype=np.int64)
    out[: len(cuts)] = cuts
    return True, out


def pal_symmetric(index: RectIndex, k: int) -> np.ndarray:
    """Symmetric cuts from bisection over a greedy diagonal probe."""
    n, m = index.shape
    if n != m:
        raise ValueError(f"pal_symmetric needs a square matrix, got {index.shape}")
    total = index.total
    if total == 0:
        return uniform_partition(n, k)
    if index.tensor.is_integral:
        lo, hi = int(math.ceil(total / (k * k))), int(total)
        while lo < hi:
            mid = (lo + hi) // 2
            if _pal_probe(index, k, mid)[0]:
                hi = mid
            else:
                lo = mid + 1
    else:
        lo, hi = total / (k * k), float(total)
        while hi - lo > REL_TOL * hi:
            mid = 0.5 * (lo + hi)
            if _pal_probe(index, k, mid)[0]:
                hi = mid
            else:
                lo = mid
    return _pal_probe(index, k, hi)[1]


def _grid_function(index: RectIndex):
    n, m = index.shape
    if n * m > DENSE_LIMIT:
        return index.grid
    dense = np.zeros((n + 1, m + 1), dtype=index.tensor.weights.dtype)
    dense[1:, 1:] = index.tensor.to_dense().cumsum(0).cumsum(1)

    def grid(rows, cols):
        return np.diff(np.diff(dense[np.ix_(rows, cols)], axis=0), axis=1)

    return grid


def _reweighting(index: RectIndex, k, eps, max_iter):
    """Yield ``(iteration, rows, cols, max_load)`` of the reweighting run.

    Row and column costs start at 1; each round partitions both cost vectors
    optimally and multiplies the costs of the heaviest tile's rows and
    columns by ``1 + eps/2`` (first heaviest tile in row-major order).
    """
    k1, k2 = k
    n, m = index.shape
    grid = _grid_function(index)
    row_cost, col_cost = np.ones(n), np.ones(m)
    grow = 1 + eps / 2
    split = _optimal_1d_dp if max(n, m) <= SMALL_N else optimal_1d
    for it in range(1, max_iter + 1):
        rows = split(prefix_of(row_cost), k1)
        cols = split(prefix_of(col_cost), k2)
        tiles = grid(rows, cols)
        flat = int(np.argmax(tiles))
        yield it, rows, cols, tiles.reshape(-1)[flat].item()
        a, b = divmod(flat, tiles.shape[1])
        row_cost[rows[a] : rows[a + 1]] *= grow
        col_cost[cols[b] : cols[b + 1]] *= grow


def four_apx(index: RectIndex, k, eps: float = 0.01, max_iter: int = 10000, target=None) -> Partition2D | None:
    """Iterative reweighting 4-approximation.

    With ``target`` given this is the decision procedure: the first round
    whose heaviest tile is at most ``target`` is accepted, and ``None`` is
    returned when ``max_iter`` rounds pass without that.

    Without ``target`` the smallest accepted target is searched.  The cost
    evolution never looks at the target before accepting, so every decision
    run follows the same trajectory and a bisection over targets is answered
    by one run of ``max_iter`` rounds: the smallest accepted target is the
    lowest heaviest-tile load on that trajectory.  The run stops early once
    the averaging lower bound is reached.
    """
    k1, k2 = k
    total = index.total
    floor = total / (k1 * k2)
    if index.tensor.is_integral:
        floor = math.ceil(floor)
    if target is not None and total > 0 and target < floor:
        return None
    best = None
    for it, rows, cols, load in _reweighting(index, k, eps, max_iter):
        if target is not None:
            if load <= target:
                return Partition2D(rows, cols, load, sweeps=it, accepted_target=target)
            continue
        if best is None or load < best.load:
            best = Partition2D(rows, cols, load, sweeps=it, accepted_target=load)
        if load <= floor:
            break
    return best


def _compositions(n: int, k: int):
    if k == 1:
        yield (0, n)
        return
    for inner in itertools.combinations(range(1, n), k - 1):
        yield (0, *inner, n)


def brute_force_optimal(problem: Problem, budget: int = 10_000_000):
    """Exhaustive minimum over all constraint-respecting partitions.

    Cuts are distinct interior positions (splitting a part never raises the
    maximum, so empty parts are never needed when ``k <= n``).  Ties are
    broken by the lexicographically smallest partition.  Returns
    ``(partition, load)``.
    """
    spec = problem.constraints
    counts = []
    for g, k in zip(spec.groups, spec.parts):
        n = problem.extents[g[0]]
        if k > n:
            raise ValueError(f"brute force needs k <= extent, got k={k} for extent {n}")
        counts.append(math.comb(n - 1, k - 1))
    count = math.prod(counts)
    if count > budget:
        raise BudgetExceeded(f"{count} partitions to enumerate exceeds the budget of {budget}")
    choices = [list(_compositions(problem.extents[g[0]], k)) for g, k in zip(spec.groups, spec.parts)]
    best_load, best = math.inf, None
    for combo in itertools.product(*choices):
        part = [None] * problem.d
        for g, cuts in zip(spec.groups, combo):
            for i in g:
                part[i] = cuts
        load = tile_loads(problem, part).max().item()
        if load < best_load:
            best_load, best = load, tuple(np.asarray(p, dtype=np.int64) for p in part)
    return best, best_load
