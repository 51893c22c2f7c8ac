"""Single-level container: disjoint grids, per-grid data, ghost exchange.

A MultiFab stores its floating point data in *units*: one FArrayBox per grid
in the contiguous layout, or one per region in the regional layout (each
grid chopped into regions, each region separately allocated with its own
ghost ring).  Ghost traffic for both layouts goes through one precomputed
copy plan; intra-grid region interfaces are just more plan tags.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from math import ceil
from typing import Callable, NamedTuple

import numpy as np

from . import compiled
from .box import (
    Box,
    IntVect,
    TileSize,
    box_diff,
    check_tile_size,
    decompose,
    grow,
    intersect,
    shift,
)
from .fab import FArrayBox

CONTIGUOUS = "contiguous"
REGIONAL = "regional"

# Plan tags bigger than this many cells are split for thread balance.
_SPLIT_CELLS = 4096


class BoxArray:
    """Ordered list of pairwise-disjoint cell-centered grids."""

    def __init__(self, boxes: list[Box]):
        boxes = list(boxes)
        for b in boxes:
            if b.is_empty or b.itype != (False, False, False):
                raise ValueError(f"grids must be non-empty and cell-centered: {b}")
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if not intersect(boxes[i], boxes[j]).is_empty:
                    raise ValueError(
                        f"grids {i} and {j} overlap: {boxes[i]} vs {boxes[j]}"
                    )
        self.boxes = boxes

    @staticmethod
    def chop(domain: Box, max_grid_size: TileSize | int) -> "BoxArray":
        """Chop a domain into grids of at most max_grid_size cells per dimension."""
        if isinstance(max_grid_size, int):
            max_grid_size = (max_grid_size,) * 3
        return BoxArray(decompose(domain, max_grid_size))

    def __len__(self) -> int:
        return len(self.boxes)

    def __getitem__(self, i: int) -> Box:
        return self.boxes[i]

    def __iter__(self):
        return iter(self.boxes)


@dataclass(frozen=True)
class Geometry:
    """Problem domain, per-dimension periodicity and mesh spacing."""

    domain: Box
    periodic: tuple[bool, bool, bool] = (True, True, True)
    dx: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.domain.is_empty:
            raise ValueError("geometry domain must be non-empty")
        if any(d <= 0 for d in self.dx):
            raise ValueError(f"mesh spacings must be positive: {self.dx}")

    @property
    def dxinv(self) -> tuple[float, float, float]:
        return tuple(1.0 / d for d in self.dx)  # type: ignore[return-value]

    def lengths(self) -> IntVect:
        return self.domain.extents


class Unit(NamedTuple):
    grid: int          # owning grid index
    valid: Box         # valid region of this unit
    fab: FArrayBox     # storage, abox = grow(valid, nghost)


class MultiFab:
    def __init__(
        self,
        ba: BoxArray,
        ncomp: int = 1,
        nghost: int = 0,
        layout: str = CONTIGUOUS,
        region_size: TileSize | None = None,
        zero: bool = True,
    ):
        if nghost < 0:
            raise ValueError(f"nghost must be non-negative, got {nghost}")
        if layout not in (CONTIGUOUS, REGIONAL):
            raise ValueError(f"unknown layout {layout!r}")
        if layout == REGIONAL:
            if region_size is None:
                raise ValueError("regional layout requires a region_size")
            region_size = check_tile_size(region_size)
        self.ba = ba
        self.ncomp = ncomp
        self.nghost = nghost
        self.layout = layout
        self.region_size = region_size
        self.units: list[Unit] = []
        for g, grid in enumerate(ba):
            if layout == CONTIGUOUS:
                valids = [grid]
            else:
                valids = decompose(grid, region_size)
            for v in valids:
                abox = grow(v, nghost) if nghost > 0 else v
                self.units.append(Unit(g, v, FArrayBox(abox, ncomp, zero=zero)))

    def clone_empty(self) -> "MultiFab":
        return MultiFab(
            self.ba, self.ncomp, self.nghost, self.layout, self.region_size, zero=False
        )

    def set_from_function(self, fn: Callable, comp: int = 0) -> None:
        """Set valid cells of one component from fn(i, j, k) (broadcastable)."""
        for u in self.units:
            i0, j0, k0 = u.valid.lo
            i1, j1, k1 = u.valid.hi
            I, J, K = np.ogrid[i0 : i1 + 1, j0 : j1 + 1, k0 : k1 + 1]
            u.fab.view(u.valid, comp, 1)[..., 0] = fn(I, J, K)

    def fill(self, v: float, comp: int | None = None) -> None:
        for u in self.units:
            u.fab.fill(v, c=comp)

    def grid_valid_array(self, g: int, comp: int = 0) -> np.ndarray:
        """Valid data of grid g as one (nx, ny, nz) array (view when contiguous)."""
        grid = self.ba[g]
        if self.layout == CONTIGUOUS:
            (unit,) = [u for u in self.units if u.grid == g]
            return unit.fab.view(grid, comp, 1)[..., 0]
        out = np.empty(grid.extents, order="F")
        for u in self.units:
            if u.grid != g:
                continue
            sl = tuple(
                slice(u.valid.lo[d] - grid.lo[d], u.valid.hi[d] - grid.lo[d] + 1)
                for d in range(3)
            )
            out[sl] = u.fab.view(u.valid, comp, 1)[..., 0]
        return out

    def _check_reduce(self, comp: int) -> None:
        if len(self.ba) == 0:
            raise ValueError("reduction over an empty BoxArray")
        if not 0 <= comp < self.ncomp:
            raise ValueError(f"component {comp} out of range")

    def reduce_max(self, comp: int = 0) -> float:
        self._check_reduce(comp)
        return max(float(np.max(u.fab.view(u.valid, comp, 1))) for u in self.units)

    def reduce_min(self, comp: int = 0) -> float:
        self._check_reduce(comp)
        return min(float(np.min(u.fab.view(u.valid, comp, 1))) for u in self.units)

    def reduce_sum(self, comp: int = 0) -> float:
        """Serial sum in (grid order, x-fastest cell order); bit-reproducible
        and identical between the contiguous and regional layouts."""
        self._check_reduce(comp)
        total = 0.0
        for g in range(len(self.ba)):
            total += compiled.serial_sum(self.grid_valid_array(g, comp))
        return total


# Convenience alias matching the construction operation name.
def build_multifab(ba, ncomp=1, nghost=0, layout=CONTIGUOUS, region_size=None):
    return MultiFab(ba, ncomp, nghost, layout, region_size)


@dataclass(frozen=True)
class CopyTag:
    dst_unit: int
    dst_box: Box
    src_unit: int
    src_box: Box
    shift: IntVect


class FillPlan:
    def __init__(self, tags: list[CopyTag]):
        self.tags = tags
        self.exec_tags = _split_tags(tags)


def _split_tags(tags: list[CopyTag]) -> list[CopyTag]:
    """Halve oversize tags along their longest non-x dimension for balance."""
    out: list[CopyTag] = []
    work = list(tags)
    while work:
        t = work.pop()
        ex = t.dst_box.extents
        d = 1 if ex[1] >= ex[2] else 2
        if t.dst_box.ncells <= _SPLIT_CELLS or ex[d] < 2:
            out.append(t)
            continue
        mid = t.dst_box.lo[d] + ex[d] // 2 - 1
        for part in _halve(t.dst_box, d, mid):
            work.append(
                CopyTag(t.dst_unit, part, t.src_unit, shift(part, tuple(-s for s in t.shift)), t.shift)
            )
    return out


def _halve(b: Box, d: int, mid: int) -> list[Box]:
    lo_hi = list(b.hi)
    lo_hi[d] = mid
    hi_lo = list(b.lo)
    hi_lo[d] = mid + 1
    return [Box(b.lo, tuple(lo_hi)), Box(tuple(hi_lo), b.hi)]


def _shift_candidates(geom: Geometry, nghost: int) -> list[IntVect]:
    """All periodic image shifts that can reach a ghost cell; zero shift first."""
    per_dim = []
    for d in range(3):
        if geom.periodic[d]:
            L = geom.lengths()[d]
            K = ceil(nghost / L)
            vals = [0]
            for k in range(1, K + 1):
                vals.extend([k * L, -k * L])
            per_dim.append(vals)
        else:
            per_dim.append([0])
    out = []
    for sz in per_dim[2]:
        for sy in per_dim[1]:
            for sx in per_dim[0]:
                out.append((sx, sy, sz))
    out.sort(key=lambda s: (s != (0, 0, 0)))
    return out


def build_fill_plan(mf: MultiFab, geom: Geometry) -> FillPlan:
    """Precompute the ghost-cell copy tags for a MultiFab.

    Every ghost cell reachable from some valid cell (directly or through a
    periodic image) gets exactly one tag; ghost cells at non-periodic
    physical boundaries are simply absent.
    """
    for b in mf.ba:
        if not geom.domain.contains(b):
            raise ValueError(f"grid {b} outside domain {geom.domain}")
    tags: list[CopyTag] = []
    if mf.nghost == 0:
        return FillPlan(tags)
    shifts = _shift_candidates(geom, mf.nghost)
    for du, dst in enumerate(mf.units):
        ghosts = box_diff(grow(dst.valid, mf.nghost), dst.valid)
        for gbox in ghosts:
            for s in shifts:
                for su, src in enumerate(mf.units):
                    isect = intersect(gbox, shift(src.valid, s))
                    if isect.is_empty:
                        continue
                    tags.append(
                        CopyTag(du, isect, su, shift(isect, tuple(-v for v in s)), s)
                    )
    return FillPlan(tags)


def _run_tags(mf: MultiFab, tags: list[CopyTag]) -> None:
    for t in tags:
        dst = mf.units[t.dst_unit].fab
        src = mf.units[t.src_unit].fab
        dst.view(t.dst_box)[...] = src.view(t.src_box)


def fill_boundary(
    mf: MultiFab, geom: Geometry, plan: FillPlan | None = None, workers: int = 1
) -> None:
    """Copy valid data into every fillable ghost cell.

    Tags write disjoint cells, so the result is independent of worker count.
    """
    if plan is None:
        plan = build_fill_plan(mf, geom)
    tags = plan.exec_tags
    if workers <= 1 or len(tags) < 2:
        _run_tags(mf, tags)
        return
    n = len(tags)
    base, rem = divmod(n, workers)
    threads = []
    start = 0
    for w in range(workers):
        size = base + (1 if w < rem else 0)
        chunk = tags[start : start + size]
        start += size
        if chunk:
            threads.append(threading.Thread(target=_run_tags, args=(mf, chunk)))
    for th in threads:
        th.start()
    for th in threads:
        th.join()


def write_plotfile(mf: MultiFab, geom: Geometry, path: str) -> None:
    """Plotfile-lite: text header plus one binary fab dump per unit."""
    os.makedirs(path, exist_ok=True)
    lines = [
        f"domain {geom.domain}",
        f"periodic {int(geom.periodic[0])} {int(geom.periodic[1])} {int(geom.periodic[2])}",
        f"dx {geom.dx[0]!r} {geom.dx[1]!r} {geom.dx[2]!r}",
        f"ncomp {mf.ncomp}",
        f"nghost {mf.nghost}",
        f"layout {mf.layout}",
        f"nunits {len(mf.units)}",
    ]
    for u in mf.units:
        lines.append(f"unit grid={u.grid} valid={u.valid}")
    with open(os.path.join(path, "HEADER"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for n, u in enumerate(mf.units):
        with open(os.path.join(path, f"unit_{n:05d}.fab"), "wb") as fh:
            u.fab.write(fh)


def read_plotfile(path: str) -> tuple[str, list[FArrayBox]]:
    with open(os.path.join(path, "HEADER")) as fh:
        header = fh.read()
    fabs = []
    n = 0
    while True:
        p = os.path.join(path, f"unit_{n:05d}.fab")
        if not os.path.exists(p):
            break
        with open(p, "rb") as fh:
            fabs.append(FArrayBox.read(fh))
        n += 1
    return header, fabs
