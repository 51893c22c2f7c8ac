"""Index-space algebra: boxes, intersections, growth, face conversion, tiling.

Everything here is pure and immutable; boxes can be shared freely across
threads.  Dimensionality is fixed at 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

IntVect = tuple[int, int, int]

# Per-dimension centering: False = cell-centered, True = node-centered.
IndexType = tuple[bool, bool, bool]

CELL: IndexType = (False, False, False)

TileSize = tuple[int, int, int]


def face_type(direction: int) -> IndexType:
    """Index type that is node-centered in `direction`, cell-centered elsewhere."""
    t = [False, False, False]
    t[direction] = True
    return tuple(t)  # type: ignore[return-value]


def check_tile_size(ts: TileSize) -> TileSize:
    ts = tuple(int(v) for v in ts)  # type: ignore[assignment]
    if len(ts) != 3 or any(v < 1 for v in ts):
        raise ValueError(f"tile size extents must be >= 1, got {ts}")
    return ts


@dataclass(frozen=True)
class Box:
    """A rectangular domain in index space: inclusive lo/hi corners plus centering.

    The canonical empty box has hi < lo in every dimension; `Box.empty()`
    constructs it.
    """

    lo: IntVect
    hi: IntVect
    itype: IndexType = CELL

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(int(v) for v in self.hi))
        lo, hi = self.lo, self.hi
        if any(h < l for l, h in zip(lo, hi)):
            if not all(h < l for l, h in zip(lo, hi)):
                raise ValueError(
                    f"partially inverted box {lo}-{hi}; use Box.empty() for empties"
                )

    @staticmethod
    def empty(itype: IndexType = CELL) -> "Box":
        return Box((0, 0, 0), (-1, -1, -1), itype)

    @property
    def is_empty(self) -> bool:
        return any(h < l for l, h in zip(self.lo, self.hi))

    @property
    def extents(self) -> IntVect:
        if self.is_empty:
            return (0, 0, 0)
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))  # type: ignore

    @property
    def ncells(self) -> int:
        ex = self.extents
        return ex[0] * ex[1] * ex[2]

    def contains_point(self, p: IntVect) -> bool:
        return all(l <= v <= h for l, v, h in zip(self.lo, p, self.hi))

    def contains(self, other: "Box") -> bool:
        if other.is_empty:
            return True
        return self.contains_point(other.lo) and self.contains_point(other.hi)

    def __str__(self) -> str:
        t = "".join("n" if f else "c" for f in self.itype)
        return (
            f"({self.lo[0]},{self.lo[1]},{self.lo[2]})-"
            f"({self.hi[0]},{self.hi[1]},{self.hi[2]})[{t}]"
        )


def intersect(a: Box, b: Box) -> Box:
    """Maximal box contained in both; empty box when disjoint."""
    if a.itype != b.itype:
        raise ValueError(f"cannot intersect boxes of types {a.itype} and {b.itype}")
    if a.is_empty or b.is_empty:
        return Box.empty(a.itype)
    lo = tuple(max(x, y) for x, y in zip(a.lo, b.lo))
    hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
    if any(h < l for l, h in zip(lo, hi)):
        return Box.empty(a.itype)
    return Box(lo, hi, a.itype)  # type: ignore[arg-type]


def grow(b: Box, ng) -> Box:
    """Grow `b` by `ng` cells on every face (scalar or per-dimension)."""
    if b.is_empty:
        raise ValueError("cannot grow an empty box")
    if isinstance(ng, int):
        ng = (ng, ng, ng)
    if any(v < 0 for v in ng):
        raise ValueError(f"negative grow width {ng}")
    lo = tuple(l - g for l, g in zip(b.lo, ng))
    hi = tuple(h + g for h, g in zip(b.hi, ng))
    return Box(lo, hi, b.itype)  # type: ignore[arg-type]


def to_face(b: Box, direction: int) -> Box:
    """Convert a cell-centered direction to face (node) centering in `direction`."""
    if b.itype[direction]:
        raise ValueError(f"box {b} is already node-centered in direction {direction}")
    hi = list(b.hi)
    hi[direction] += 1
    return Box(b.lo, tuple(hi), face_type(direction) if b.itype == CELL else _merge_type(b.itype, direction))


def _merge_type(itype: IndexType, direction: int) -> IndexType:
    t = list(itype)
    t[direction] = True
    return tuple(t)  # type: ignore[return-value]


def shift(b: Box, v: IntVect) -> Box:
    if b.is_empty:
        return b
    lo = tuple(l + d for l, d in zip(b.lo, v))
    hi = tuple(h + d for h, d in zip(b.hi, v))
    return Box(lo, hi, b.itype)  # type: ignore[arg-type]


def _chop_extent(lo: int, length: int, ts: int) -> list[tuple[int, int]]:
    """1D tile ranges: ceil-count tiles, as equal as possible, larger first."""
    ntiles = ceil(length / ts)
    base, rem = divmod(length, ntiles)
    ranges = []
    pos = lo
    for t in range(ntiles):
        ext = base + 1 if t < rem else base
        ranges.append((pos, pos + ext - 1))
        pos += ext
    return ranges


def decompose(b: Box, ts: TileSize) -> list[Box]:
    """Split a cell-centered box into tiles, ordered x-fastest then y then z.

    Per dimension the tile count is ceil(extent / ts) and the extents are as
    equal as possible with the larger tiles first.  The tiles are pairwise
    disjoint and cover `b` exactly.
    """
    ts = check_tile_size(ts)
    if b.is_empty:
        raise ValueError("cannot decompose an empty box")
    if b.itype != CELL:
        raise ValueError("decompose requires a cell-centered box")
    ranges = [_chop_extent(b.lo[d], b.extents[d], ts[d]) for d in range(3)]
    tiles = []
    for zr in ranges[2]:
        for yr in ranges[1]:
            for xr in ranges[0]:
                tiles.append(Box((xr[0], yr[0], zr[0]), (xr[1], yr[1], zr[1])))
    return tiles


def box_diff(a: Box, b: Box) -> list[Box]:
    """Disjoint boxes covering the cells of `a` not in `b`."""
    isect = intersect(a, b)
    if isect.is_empty:
        return [] if a.is_empty else [a]
    out = []
    lo = list(a.lo)
    hi = list(a.hi)
    # Peel slabs off each dimension in turn, shrinking the remainder.
    for d in range(3):
        if lo[d] < isect.lo[d]:
            slab_hi = hi.copy()
            slab_hi[d] = isect.lo[d] - 1
            out.append(Box(tuple(lo), tuple(slab_hi), a.itype))
            lo[d] = isect.lo[d]
        if hi[d] > isect.hi[d]:
            slab_lo = lo.copy()
            slab_lo[d] = isect.hi[d] + 1
            out.append(Box(tuple(slab_lo), tuple(hi), a.itype))
            hi[d] = isect.hi[d]
    return out
