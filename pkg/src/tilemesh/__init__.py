"""Block-structured mesh framework with logical tiling and a stencil
benchmark harness."""

from .box import Box, box_diff, decompose, grow, intersect, shift, to_face
from .fab import FArrayBox, copy_region
from .iterator import (
    DEFAULT_TILE_SIZE,
    Arena,
    ArenaPool,
    TileCursor,
    TileSchedule,
    build_schedule,
    parallel_for_tiles,
    partition,
)
from .kernels import (
    HeatParams,
    StencilCoeffs8,
    derive_coeffs8,
    heat_step,
    init_cosine,
    wide4_step,
)
from .level import (
    BoxArray,
    Geometry,
    MultiFab,
    build_fill_plan,
    fill_boundary,
    read_plotfile,
    write_plotfile,
)

__all__ = [
    "Box", "box_diff", "decompose", "grow", "intersect", "shift", "to_face",
    "FArrayBox", "copy_region",
    "DEFAULT_TILE_SIZE", "Arena", "ArenaPool", "TileCursor", "TileSchedule",
    "build_schedule", "parallel_for_tiles", "partition",
    "HeatParams", "StencilCoeffs8", "derive_coeffs8", "heat_step",
    "init_cosine", "wide4_step",
    "BoxArray", "Geometry", "MultiFab", "build_fill_plan", "fill_boundary",
    "read_plotfile", "write_plotfile",
]

__version__ = "0.1.0"
