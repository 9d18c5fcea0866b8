"""Discrete load distributions and the queries the partitioners need.

A load distribution is a set of weighted points at integer indices.  Two
query shapes are supported: per-dimension prefix sums (and their inverse),
and weighted rectangle counts over 2-D tensors through :class:`RectIndex`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SparseTensor",
    "DimPrefix",
    "RectIndex",
    "build_tensor",
    "dim_prefix",
    "prefix_inverse",
    "build_rect_index",
    "rect_load",
]


def _weight_dtype(weights: np.ndarray) -> np.dtype:
    # integral weights stay integral so that cumulative sums are exact
    if weights.size == 0 or np.all(np.mod(weights, 1) == 0):
        return np.dtype(np.int64)
    return np.dtype(np.float64)


@dataclass(frozen=True, eq=False)
class SparseTensor:
    """COO tensor with merged, strictly positive weights.

    ``indices`` has shape ``(nnz, d)`` and is sorted lexicographically;
    ``weights`` has shape ``(nnz,)``.
    """

    dims: tuple[int, ...]
    indices: np.ndarray
    weights: np.ndarray

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def nnz(self) -> int:
        return int(self.weights.shape[0])

    @property
    def total_load(self):
        return self.weights.sum().item() if self.nnz else 0

    @property
    def is_integral(self) -> bool:
        return self.weights.dtype.kind in "iu"

    def entries(self) -> list[tuple[tuple[int, ...], float]]:
        return [(tuple(int(u) for u in idx), w.item()) for idx, w in zip(self.indices, self.weights)]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dims, dtype=self.weights.dtype)
        np.add.at(out, tuple(self.indices.T), self.weights)
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseTensor):
            return NotImplemented
        return (
            self.dims == other.dims
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self):
        return f"SparseTensor(dims={self.dims}, nnz={self.nnz}, total_load={self.total_load})"


def build_tensor(dims: Sequence[int], indices, weights=None) -> SparseTensor:
    """Validate raw COO data and return a :class:`SparseTensor`.

    Duplicate index vectors are merged by summing their weights and
    zero-weight entries are dropped.  ``weights=None`` means pattern input
    (every entry weighs 1).
    """
    dims = tuple(int(n) for n in dims)
    if any(n < 0 for n in dims):
        raise ValueError(f"negative extent in dims={dims}")
    d = len(dims)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        idx = idx.reshape(0, d)
    if idx.ndim == 1 and d == 1:
        idx = idx.reshape(-1, 1)
    if idx.ndim != 2 or idx.shape[1] != d:
        raise ValueError(f"indices must have shape (nnz, {d}), got {idx.shape}")
    if weights is None:
        w = np.ones(idx.shape[0], dtype=np.int64)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != idx.shape[0]:
            raise ValueError(f"{w.shape[0]} weights for {idx.shape[0]} index vectors")
        if not np.all(np.isfinite(w)):
            bad = int(np.flatnonzero(~np.isfinite(w))[0])
            raise ValueError(f"non-finite weight {w[bad]} at entry {bad}")
        if np.any(w < 0):
            bad = int(np.flatnonzero(w < 0)[0])
            raise ValueError(f"negative weight {w[bad]} at entry {bad} (index {tuple(idx[bad])})")
        w = w.astype(_weight_dtype(w))

    if idx.shape[0]:
        lim = np.asarray(dims, dtype=np.int64)
        out = np.any((idx < 0) | (idx >= lim), axis=1)
        if out.any():
            bad = int(np.flatnonzero(out)[0])
            raise ValueError(f"entry {bad} has index {tuple(int(u) for u in idx[bad])} outside dims {dims}")

    if idx.shape[0]:
        uniq, inv = np.unique(idx, axis=0, return_inverse=True)
        merged = np.zeros(uniq.shape[0], dtype=w.dtype)
        np.add.at(merged, inv.reshape(-1), w)
        keep = merged > 0
        idx, w = uniq[keep], merged[keep]
    else:
        w = w.astype(np.int64)
    idx.setflags(write=False)
    w.setflags(write=False)
    return SparseTensor(dims, idx, w)


@dataclass(frozen=True)
class DimPrefix:
    """Cumulative load along one dimension; ``values[x]`` is the load below x."""

    dim: int
    values: np.ndarray

    @property
    def total(self):
        return self.values[-1].item()

    def __len__(self):
        return len(self.values)


def dim_prefix(tensor: SparseTensor, dim: int) -> DimPrefix:
    if not 0 <= dim < tensor.ndim:
        raise ValueError(f"dim {dim} out of range for a {tensor.ndim}-D tensor")
    n = tensor.dims[dim]
    marg = np.bincount(tensor.indices[:, dim], weights=tensor.weights, minlength=n) if tensor.nnz else np.zeros(n)
    marg = marg.astype(tensor.weights.dtype)
    values = np.concatenate([[0], np.cumsum(marg)]).astype(tensor.weights.dtype)
    values.setflags(write=False)
    return DimPrefix(dim, values)


def prefix_inverse(prefix, y):
    """Largest boundary ``x`` with ``prefix[x] <= y``.

    ``prefix`` is a :class:`DimPrefix` or a plain monotone array; ``y`` may be
    a scalar or an array.  Values outside ``[0, total]`` are rejected.
    """
    values = prefix.values if isinstance(prefix, DimPrefix) else np.asarray(prefix)
    ys = np.asarray(y)
    if ys.dtype == object:
        lo_bad = any(v < 0 for v in ys.reshape(-1))
        hi_bad = any(v > values[-1] for v in ys.reshape(-1))
    else:
        lo_bad = bool(np.any(ys < 0))
        hi_bad = bool(np.any(ys > values[-1]))
    if lo_bad or hi_bad:
        raise ValueError(f"prefix_inverse argument {y} outside [0, {values[-1]}]")
    x = np.searchsorted(values, ys, side="right") - 1
    return int(x) if np.ndim(x) == 0 else x


class RectIndex:
    """Static weighted rectangle-count structure over a 2-D tensor.

    Entries are bucketed into a merge tree over the shorter axis: at level
    ``l`` the axis is cut into blocks of ``2**l`` coordinates and each block
    keeps its entries sorted by the other coordinate together with running
    weight sums.  A dominance count walks one block per level, so a query
    costs O(log n log o) and the structure takes O(o log min(n, m)) space.
    """

    def __init__(self, tensor: SparseTensor):
        if tensor.ndim != 2:
            raise ValueError(f"RectIndex needs a 2-D tensor, got d={tensor.ndim}")
        self.tensor = tensor
        self.shape = tensor.dims
        n, m = tensor.dims
        rows, cols = tensor.indices[:, 0], tensor.indices[:, 1]
        self.transposed = m < n
        if self.transposed:
            n, m = m, n
            rows, cols = cols, rows
        self._n, self._m = n, m
        self.total = tensor.total_load
        dtype = tensor.weights.dtype
        self.levels = max(1, math.ceil(math.log2(n))) + 1 if n > 1 else 1
        self._keys: list[np.ndarray] = []
        self._cum: list[np.ndarray] = []
        stride = m + 1
        for lvl in range(self.levels):
            key = (rows >> lvl) * stride + cols
            order = np.argsort(key, kind="stable")
            self._keys.append(key[order])
            self._cum.append(np.concatenate([np.zeros(1, dtype), np.cumsum(tensor.weights[order])]))

    def _dominance(self, r, c):
        """Weight of entries with row < r and col < c (internal axis order)."""
        r = np.clip(np.asarray(r, dtype=np.int64), 0, self._n)
        c = np.clip(np.asarray(c, dtype=np.int64), 0, self._m)
        r, c = np.broadcast_arrays(r, c)
        out = np.zeros(r.shape, dtype=self._cum[0].dtype)
        if self.tensor.nnz == 0:
            return out
        stride = self._m + 1
        start = np.zeros(r.shape, dtype=np.int64)
        for lvl in range(self.levels - 1, -1, -1):
            hit = (r >> lvl) & 1 == 1
            if not hit.any():
                continue
            block = start[hit] >> lvl
            keys, cum = self._keys[lvl], self._cum[lvl]
            hi = np.searchsorted(keys, block * stride + c[hit], side="left")
            lo = np.searchsorted(keys, block * stride, side="left")
            out[hit] += cum[hi] - cum[lo]
            start[hit] += 1 << lvl
        return out

    def dominance(self, r, c):
        """Weight of entries with row < r and col < c (tensor axis order)."""
        if self.transposed:
            return self._dominance(c, r)
        return self._dominance(r, c)

    def query(self, r1, r2, c1, c2):
        """Weight inside rows [r1, r2) x cols [c1, c2); empty ranges give 0."""
        n, m = self.shape
        r1, r2 = max(0, min(r1, n)), max(0, min(r2, n))
        c1, c2 = max(0, min(c1, m)), max(0, min(c2, m))
        if r1 >= r2 or c1 >= c2:
            return 0
        d = self.dominance([r2, r1, r2, r1], [c2, c2, c1, c1])
        return (d[0] - d[1] - d[2] + d[3]).item()

    def grid(self, row_bounds, col_bounds) -> np.ndarray:
        """Tile loads for the grid induced by two monotone boundary arrays."""
        rb = np.asarray(row_bounds, dtype=np.int64)
        cb = np.asarray(col_bounds, dtype=np.int64)
        dom = self.dominance(rb[:, None], cb[None, :])
        return np.diff(np.diff(dom, axis=0), axis=1)

    def __repr__(self):
        return f"RectIndex(shape={self.shape}, nnz={self.tensor.nnz}, levels={self.levels})"


def build_rect_index(tensor: SparseTensor) -> RectIndex:
    return RectIndex(tensor)


def rect_load(index: RectIndex, row_range, col_range):
    """Load of the half-open rectangle ``row_range x col_range``."""
    return index.query(row_range[0], row_range[1], col_range[0], col_range[1])
