"""Reading matrices and point sets, input transforms, and result files."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .loads import SparseTensor, build_tensor

__all__ = [
    "MatrixMarketError",
    "PointSet",
    "PartitionRecord",
    "read_matrix_market",
    "write_matrix_market",
    "reorder_degree_ascending",
    "upper_triangular",
    "read_points",
    "points_to_tensor",
    "write_partition",
    "read_partition",
    "write_results_csv",
    "read_results_csv",
]

PARTITION_FORMAT = "rectpart-partition 1"


class MatrixMarketError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = path, line


def _parse_header(path, first: str):
    parts = first.strip().split()
    if len(parts) < 4 or parts[0].lower() != "%%matrixmarket" or parts[1].lower() != "matrix":
        raise MatrixMarketError(path, 1, f"not a Matrix Market header: {first.strip()!r}")
    fmt = parts[2].lower()
    field_ = parts[3].lower()
    symmetry = parts[4].lower() if len(parts) > 4 else "general"
    if fmt == "array":
        raise MatrixMarketError(path, 1, "dense array format is not supported")
    if fmt != "coordinate":
        raise MatrixMarketError(path, 1, f"unknown format {fmt!r}")
    if field_ not in ("pattern", "real", "integer", "double"):
        raise MatrixMarketError(path, 1, f"unsupported field {field_!r}")
    if symmetry not in ("general", "symmetric", "skew-symmetric", "hermitian"):
        raise MatrixMarketError(path, 1, f"unknown symmetry {symmetry!r}")
    return field_, symmetry


def _check_body(path, lines: Sequence[str], first_line: int, ncols: int):
    """Slow path: locate the first malformed entry line."""
    for off, line in enumerate(lines):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        toks = s.split()
        if len(toks) < ncols:
            raise MatrixMarketError(path, first_line + off, f"expected {ncols} fields, got {len(toks)}")
        try:
            int(toks[0]), int(toks[1])
            for t in toks[2:ncols]:
                float(t)
        except ValueError:
            raise MatrixMarketError(path, first_line + off, f"non-numeric entry {s!r}") from None


def read_matrix_market(path, weighted: bool = False) -> SparseTensor:
    """Load a coordinate Matrix Market file as a 2-D tensor.

    Indices become 0-based, symmetric storage is expanded to both triangles
    and duplicates are merged.  Values are ignored unless ``weighted``; a
    weighted load uses absolute values.
    """
    path = os.fspath(path)
    with open(path, "r") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    field_, symmetry = _parse_header(path, lines[0])
    i = 1
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("%")):
        i += 1
    if i == len(lines):
        raise MatrixMarketError(path, i, "missing size line")
    try:
        nrows, ncols, nnz = (int(x) for x in lines[i].split())
    except ValueError:
        raise MatrixMarketError(path, i + 1, f"bad size line {lines[i].strip()!r}") from None
    body_start = i + 1
    width = 2 if field_ == "pattern" else 3

    body = lines[body_start:]
    try:
        df = pd.read_csv(
            io.StringIO("\n".join(body)),
            sep=r"\s+",
            header=None,
            comment="%",
            usecols=range(width),
            engine="c",
            dtype={0: np.int64, 1: np.int64},
        )
        data = df.to_numpy()
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        if not any(s.strip() and not s.lstrip().startswith("%") for s in body):
            data = np.zeros((0, width))
        else:
            _check_body(path, body, body_start + 1, width)
            raise MatrixMarketError(path, body_start + 1, str(exc)) from None
    if data.shape[0] != nnz:
        raise MatrixMarketError(path, body_start + 1, f"header announces {nnz} entries, found {data.shape[0]}")
    if data.shape[0] and np.isnan(data.astype(np.float64)).any():
        _check_body(path, body, body_start + 1, width)
        raise MatrixMarketError(path, body_start + 1, "missing fields")

    r = data[:, 0].astype(np.int64) - 1
    c = data[:, 1].astype(np.int64) - 1
    bad = (r < 0) | (r >= nrows) | (c < 0) | (c >= ncols)
    if bad.any():
        pos = int(np.flatnonzero(bad)[0])
        raise MatrixMarketError(path, _entry_line(body, pos) + body_start, f"index ({r[pos] + 1}, {c[pos] + 1}) outside {nrows}x{ncols}")
    w = np.abs(data[:, 2].astype(np.float64)) if weighted and width == 3 else None
    if symmetry != "general":
        off = r != c
        r, c = np.concatenate([r, c[off]]), np.concatenate([c, r[off]])
        if w is not None:
            w = np.concatenate([w, w[off]])
    return build_tensor((nrows, ncols), np.column_stack([r, c]), w)


def _entry_line(body, pos) -> int:
    seen = -1
    for off, line in enumerate(body):
        s = line.strip()
        if s and not s.startswith("%"):
            seen += 1
            if seen == pos:
                return off + 1
    return len(body)


def write_matrix_market(tensor: SparseTensor, path, pattern: bool | None = None):
    if tensor.ndim != 2:
        raise ValueError("Matrix Market files hold matrices only")
    if pattern is None:
        pattern = bool(tensor.is_integral and np.all(tensor.weights == 1))
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {'pattern' if pattern else 'real'} general\n")
        fh.write(f"{tensor.dims[0]} {tensor.dims[1]} {tensor.nnz}\n")
        for (a, b), w in zip(tensor.indices.tolist(), tensor.weights.tolist()):
            fh.write(f"{a + 1} {b + 1}\n" if pattern else f"{a + 1} {b + 1} {w!r}\n")


def _permute(tensor: SparseTensor, perm: np.ndarray) -> SparseTensor:
    """Relabel index u as position of u in ``perm`` on both axes."""
    rank = np.empty_like(perm)
    rank[perm] = np.arange(len(perm))
    idx = rank[tensor.indices]
    return build_tensor(tensor.dims, idx, None if _is_pattern(tensor) else tensor.weights)


def _is_pattern(tensor: SparseTensor) -> bool:
    return tensor.is_integral and bool(np.all(tensor.weights == 1))


def reorder_degree_ascending(tensor: SparseTensor) -> SparseTensor:
    """Apply one permutation to rows and columns, sorting by total degree.

    Degree of vertex u is its row count plus its column count; ties keep
    the original order.
    """
    if tensor.ndim != 2 or tensor.dims[0] != tensor.dims[1]:
        raise ValueError(f"degree reordering needs a square matrix, got {tensor.dims}")
    n = tensor.dims[0]
    deg = np.bincount(tensor.indices[:, 0], minlength=n) + np.bincount(tensor.indices[:, 1], minlength=n)
    perm = np.argsort(deg, kind="stable")
    return _permute(tensor, perm)


def upper_triangular(tensor: SparseTensor, include_diagonal: bool = False) -> SparseTensor:
    if tensor.ndim != 2 or tensor.dims[0] != tensor.dims[1]:
        raise ValueError(f"upper_triangular needs a square matrix, got {tensor.dims}")
    r, c = tensor.indices[:, 0], tensor.indices[:, 1]
    keep = c >= r if include_diagonal else c > r
    return build_tensor(tensor.dims, tensor.indices[keep], None if _is_pattern(tensor) else tensor.weights[keep])


@dataclass
class PointSet:
    """Weighted points; ``ranks[:, i]`` is each point's rank in dimension i."""

    coords: np.ndarray
    weights: np.ndarray
    ranks: np.ndarray = field(init=False)
    sorted_coords: list[np.ndarray] = field(init=False)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(len(self.weights), -1)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if np.any(self.weights < 0):
            raise ValueError("point weights must be non-negative")
        o, d = self.coords.shape
        self.ranks = np.empty((o, d), dtype=np.int64)
        self.sorted_coords = []
        for i in range(d):
            order = np.argsort(self.coords[:, i], kind="stable")
            self.ranks[order, i] = np.arange(o)
            self.sorted_coords.append(self.coords[order, i])

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __len__(self):
        return self.coords.shape[0]

    def cut_coordinates(self, dim: int, cuts) -> np.ndarray:
        """Original coordinate at each rank-space cut (``inf`` past the end)."""
        sc = self.sorted_coords[dim]
        cuts = np.asarray(cuts, dtype=np.int64)
        out = np.full(len(cuts), np.inf)
        inside = cuts < len(sc)
        out[inside] = sc[cuts[inside]]
        return out


def read_points(path, weighted: bool | None = None) -> PointSet:
    """Whitespace- or comma-separated coordinates, one point per line.

    With ``weighted=None`` a weight column is assumed only when the file says
    so in a ``# weighted`` comment; otherwise every column is a coordinate.
    """
    rows = []
    has_weight = bool(weighted)
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#") or s.startswith("%"):
                if weighted is None and "weighted" in s.lower():
                    has_weight = True
                continue
            toks = s.replace(",", " ").split()
            if width is None:
                width = len(toks)
            elif len(toks) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(toks)}")
            try:
                rows.append([float(t) for t in toks])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field in {s!r}") from None
    if not rows:
        raise ValueError(f"{path}: no points")
    arr = np.asarray(rows)
    if has_weight:
        if arr.shape[1] < 2:
            raise ValueError(f"{path}: weighted points need at least one coordinate")
        return PointSet(arr[:, :-1], arr[:, -1])
    return PointSet(arr, np.ones(len(arr)))


def points_to_tensor(points: PointSet) -> SparseTensor:
    o = len(points)
    weights = None if np.all(points.weights == 1) else points.weights
    return build_tensor((o,) * points.d, points.ranks, weights)


@dataclass
class PartitionRecord:
    partition: tuple[tuple[int, ...], ...]
    k: tuple[int, ...]
    objective: str
    algorithm: str
    load: float
    normalized_load: float
    seed: int | None = None
    iterations: int = 0

    @property
    def d(self) -> int:
        return len(self.partition)

    @classmethod
    def create(cls, partition, **kw) -> PartitionRecord:
        part = tuple(tuple(int(x) for x in p) for p in partition)
        return cls(part, tuple(len(p) - 1 for p in part), **kw)


def write_partition(record: PartitionRecord, path):
    lines = [
        f"# {PARTITION_FORMAT}",
        f"d {record.d}",
        "k " + " ".join(str(x) for x in record.k),
        f"objective {record.objective}",
        f"algorithm {record.algorithm}",
        f"load {record.load!r}",
        f"normalized_load {record.normalized_load!r}",
        f"seed {'none' if record.seed is None else record.seed}",
        f"iterations {record.iterations}",
    ]
    lines += [f"p{i} " + " ".join(str(x) for x in p) for i, p in enumerate(record.partition)]
    Path(path).write_text("\n".join(lines) + "\n")


def _num(s: str):
    v = float(s)
    return int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v


def read_partition(path) -> PartitionRecord:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != f"# {PARTITION_FORMAT}":
        raise ValueError(f"{path}: not a partition file (expected '# {PARTITION_FORMAT}')")
    kv = {}
    parts = {}
    for line in text[1:]:
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key.startswith("p") and key[1:].isdigit():
            parts[int(key[1:])] = tuple(int(x) for x in rest.split())
        else:
            kv[key] = rest.strip()
    d = int(kv["d"])
    if sorted(parts) != list(range(d)):
        raise ValueError(f"{path}: expected partition arrays p0..p{d - 1}")
    seed = None if kv["seed"] == "none" else int(kv["seed"])
    return PartitionRecord(
        partition=tuple(parts[i] for i in range(d)),
        k=tuple(int(x) for x in kv["k"].split()),
        objective=kv["objective"],
        algorithm=kv["algorithm"],
        load=_num(kv["load"]),
        normalized_load=float(kv["normalized_load"]),
        seed=seed,
        iterations=int(kv["iterations"]),
    )


RESULT_FIELDS = [
    "kind",
    "instance",
    "objective",
    "algorithm",
    "k",
    "seed",
    "load",
    "normalized_load",
    "iterations",
    "build_time",
    "partition_time",
    "wall_time",
    "error",
]
TIMING_FIELDS = ("build_time", "partition_time", "wall_time")


def write_results_csv(rows: Iterable[dict], path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
