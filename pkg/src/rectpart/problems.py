"""Partitioning objectives expressed as sums of embedded 2-D (or 1-D) loads.

A :class:`Problem` describes a d-dimensional load ``f`` as a sum of terms,
each term being a tensor whose axes are mapped onto problem dimensions.
Tile loads of the composite are the sums of the per-term tile tables
broadcast over the dimensions a term does not touch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

from .loads import RectIndex, SparseTensor, dim_prefix

__all__ = [
    "ConstraintSpec",
    "Term",
    "Problem",
    "Evaluation",
    "make_rpp1d",
    "make_rpp2d",
    "make_srpp2d",
    "make_spgemm3d",
    "make_tri3d",
    "tile_loads",
    "evaluate",
    "normalized_load",
]


@dataclass(frozen=True)
class ConstraintSpec:
    """Groups of dimensions forced to share one partition array.

    ``groups`` partitions ``range(d)``; ``parts[g]`` is the part count every
    dimension of group ``g`` uses.
    """

    groups: tuple[tuple[int, ...], ...]
    parts: tuple[int, ...]

    def __post_init__(self):
        if len(self.groups) != len(self.parts):
            raise ValueError("one part count per group is required")
        flat = [i for g in self.groups for i in g]
        if any(len(g) == 0 for g in self.groups):
            raise ValueError("empty constraint group")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError(f"groups {self.groups} must be disjoint and cover 0..d-1")
        if any(k < 1 for k in self.parts):
            raise ValueError(f"part counts must be >= 1, got {self.parts}")

    @classmethod
    def unconstrained(cls, k: Sequence[int]) -> ConstraintSpec:
        return cls(tuple((i,) for i in range(len(k))), tuple(int(x) for x in k))

    @classmethod
    def from_groups(cls, groups, k: Sequence[int]) -> ConstraintSpec:
        groups = tuple(tuple(int(i) for i in g) for g in groups)
        parts = []
        for g in groups:
            ks = {int(k[i]) for i in g}
            if len(ks) != 1:
                raise ValueError(f"dimensions {g} are grouped but have part counts {sorted(ks)}")
            parts.append(ks.pop())
        return cls(groups, tuple(parts))

    @property
    def d(self) -> int:
        return sum(len(g) for g in self.groups)

    def group_of(self, dim: int) -> int:
        for gi, g in enumerate(self.groups):
            if dim in g:
                return gi
        raise ValueError(f"dimension {dim} not in any group")


@dataclass(frozen=True)
class Term:
    """One tensor of the composite load, mapped onto problem dimensions."""

    tensor: SparseTensor
    dims: tuple[int, ...]
    index: RectIndex | None = None
    prefix: np.ndarray | None = None

    def grid(self, partition) -> np.ndarray:
        if len(self.dims) == 1:
            return np.diff(self.prefix[np.asarray(partition[self.dims[0]], dtype=np.int64)])
        a, b = self.dims
        return self.index.grid(partition[a], partition[b])


@dataclass(frozen=True)
class Problem:
    name: str
    terms: tuple[Term, ...]
    extents: tuple[int, ...]
    k: tuple[int, ...]
    constraints: ConstraintSpec
    _prefix_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        d = len(self.extents)
        if len(self.k) != d:
            raise ValueError(f"k has {len(self.k)} entries for a {d}-D problem")
        if any(x < 1 for x in self.k):
            raise ValueError(f"part counts must be >= 1, got {self.k}")
        if self.constraints.d != d:
            raise ValueError("constraint groups do not cover the problem dimensions")
        for t in self.terms:
            if len(t.dims) != t.tensor.ndim or any(not 0 <= i < d for i in t.dims):
                raise ValueError(f"term embedding {t.dims} invalid for d={d}")
            for axis, i in enumerate(t.dims):
                if t.tensor.dims[axis] != self.extents[i]:
                    raise ValueError(f"term axis {axis} has extent {t.tensor.dims[axis]}, dimension {i} has {self.extents[i]}")
        for g, kg in zip(self.constraints.groups, self.constraints.parts):
            if len({self.extents[i] for i in g}) != 1:
                raise ValueError(f"grouped dimensions {g} have different extents")
            if any(self.k[i] != kg for i in g):
                raise ValueError(f"grouped dimensions {g} must all use {kg} parts")

    @property
    def d(self) -> int:
        return len(self.extents)

    @property
    def total_load(self):
        return sum(t.tensor.total_load for t in self.terms)

    @property
    def is_integral(self) -> bool:
        return all(t.tensor.is_integral for t in self.terms)

    def prefix(self, dim: int) -> np.ndarray:
        """Cumulative load along ``dim`` summed over the terms touching it."""
        if dim not in self._prefix_cache:
            n = self.extents[dim]
            acc = np.zeros(n + 1, dtype=np.int64 if self.is_integral else np.float64)
            for t in self.terms:
                for axis, i in enumerate(t.dims):
                    if i == dim:
                        acc = acc + dim_prefix(t.tensor, axis).values
            acc.setflags(write=False)
            self._prefix_cache[dim] = acc
        return self._prefix_cache[dim]

    def tile_loads(self, partition) -> np.ndarray:
        return tile_loads(self, partition)

    def average_tile_load(self) -> float:
        """Mean tile load; a term is replicated over the dimensions it skips."""
        total = 0
        for t in self.terms:
            total += t.tensor.total_load * prod(self.k[i] for i in range(self.d) if i not in t.dims)
        return total / prod(self.k)

    def check_partition(self, partition) -> tuple[np.ndarray, ...]:
        if len(partition) != self.d:
            raise ValueError(f"expected {self.d} partition arrays, got {len(partition)}")
        out = []
        for i, p in enumerate(partition):
            arr = np.asarray(p, dtype=np.int64)
            if arr.ndim != 1 or len(arr) != self.k[i] + 1:
                raise ValueError(f"partition {i} must have {self.k[i] + 1} boundaries, got {list(np.ravel(arr))}")
            if arr[0] != 0 or arr[-1] != self.extents[i] or np.any(np.diff(arr) < 0):
                raise ValueError(f"partition {i} = {arr.tolist()} is not monotone over [0, {self.extents[i]}]")
            out.append(arr)
        return tuple(out)


def _term(tensor: SparseTensor, dims) -> Term:
    dims = tuple(dims)
    if len(dims) == 1:
        return Term(tensor, dims, prefix=dim_prefix(tensor, 0).values)
    return Term(tensor, dims, RectIndex(tensor))


def make_rpp1d(tensor: SparseTensor, k: int) -> Problem:
    if tensor.ndim != 1:
        raise ValueError(f"1-D partitioning needs a 1-D tensor, got d={tensor.ndim}")
    return Problem("rpp1d", (_term(tensor, (0,)),), tensor.dims, (int(k),), ConstraintSpec.unconstrained([k]))


def make_rpp2d(A: SparseTensor, k1: int, k2: int) -> Problem:
    if A.ndim != 2:
        raise ValueError(f"rpp2d needs a matrix, got d={A.ndim}")
    k = (int(k1), int(k2))
    return Problem("rpp2d", (_term(A, (0, 1)),), A.dims, k, ConstraintSpec.unconstrained(k))


def make_srpp2d(A: SparseTensor, k: int) -> Problem:
    if A.ndim != 2 or A.dims[0] != A.dims[1]:
        raise ValueError(f"srpp2d needs a square matrix, got dims {A.dims}")
    kk = (int(k), int(k))
    return Problem("srpp2d", (_term(A, (0, 1)),), A.dims, kk, ConstraintSpec.from_groups([(0, 1)], kk))


def make_spgemm3d(A: SparseTensor, B: SparseTensor, k) -> Problem:
    """max over (u, w, v) of load_A(u, w) + load_B(w, v)."""
    if A.ndim != 2 or B.ndim != 2:
        raise ValueError("spgemm3d needs two matrices")
    if A.dims[1] != B.dims[0]:
        raise ValueError(f"inner dimensions differ: A is {A.dims}, B is {B.dims}")
    kk = (int(k),) * 3 if np.ndim(k) == 0 else tuple(int(x) for x in k)
    extents = (A.dims[0], A.dims[1], B.dims[1])
    terms = (_term(A, (0, 1)), _term(B, (1, 2)))
    return Problem("spgemm3d", terms, extents, kk, ConstraintSpec.unconstrained(kk))


def make_tri3d(A: SparseTensor, k: int) -> Problem:
    """max over (u, w, v) of load(u, w) + load(w, v) + load(u, v), with p1 = p2 = p3."""
    if A.ndim != 2 or A.dims[0] != A.dims[1]:
        raise ValueError(f"tri3d needs a square matrix, got dims {A.dims}")
    n = A.dims[0]
    kk = (int(k),) * 3
    idx = RectIndex(A)
    terms = (Term(A, (0, 1), idx), Term(A, (1, 2), idx), Term(A, (0, 2), idx))
    return Problem("tri3d", terms, (n, n, n), kk, ConstraintSpec.from_groups([(0, 1, 2)], kk))


def tile_loads(problem: Problem, partition) -> np.ndarray:
    """Dense ``k_1 x ... x k_d`` array of tile loads."""
    parts = [np.asarray(p, dtype=np.int64) for p in partition]
    dtype = np.int64 if problem.is_integral else np.float64
    out = np.zeros(problem.k, dtype=dtype)
    for t in problem.terms:
        g = t.grid(parts)
        shape = [1] * problem.d
        for i in t.dims:
            shape[i] = problem.k[i]
        if len(t.dims) == 2 and t.dims[0] > t.dims[1]:
            g = g.T
        out += g.reshape(shape)
    return out


@dataclass(frozen=True)
class Evaluation:
    max_load: float
    argmax: tuple[int, ...]
    min_load: float
    mean_load: float
    tiles: np.ndarray


def evaluate(problem: Problem, partition) -> Evaluation:
    parts = problem.check_partition(partition)
    tiles = tile_loads(problem, parts)
    flat = int(np.argmax(tiles))  # first maximum in C order = lexicographically smallest
    return Evaluation(
        max_load=tiles.reshape(-1)[flat].item(),
        argmax=tuple(int(j) for j in np.unravel_index(flat, tiles.shape)),
        min_load=tiles.min().item(),
        mean_load=problem.average_tile_load(),
        tiles=tiles,
    )


def normalized_load(problem: Problem, partition) -> float:
    """Max tile load over mean tile load (1.0 is perfect balance)."""
    avg = problem.average_tile_load()
    if avg <= 0:
        raise ValueError("normalized load is undefined for an empty load distribution")
    return evaluate(problem, partition).max_load / avg
