"""Rectilinear partitioning with a subgradient optimizer and classic baselines."""

from .loads import RectIndex, SparseTensor, build_rect_index, build_tensor, dim_prefix, prefix_inverse, rect_load
from .problems import (
    ConstraintSpec,
    Problem,
    evaluate,
    make_rpp1d,
    make_rpp2d,
    make_spgemm3d,
    make_srpp2d,
    make_tri3d,
    normalized_load,
    tile_loads,
)
from .sgo import OptimizerConfig, RunResult, optimize

__version__ = "0.1.0"
