"""Tiled iteration: schedules, cursors, static work partitioning, arenas.

A schedule flattens an outer loop over units (grids, or regions in the
regional layout) and an inner loop over logical tiles into one ordered list.
Workers get contiguous, deterministic ranges of that list, so the classic
worked example (12 tiles, 4 threads, 3 tiles each) falls out directly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .box import Box, TileSize, check_tile_size, decompose, grow, to_face
from .compiled import tiles_array

# Effectively untiled in the unit-stride x dimension; keeps inner loops streaming.
DEFAULT_TILE_SIZE: TileSize = (1048576, 8, 8)

OFF = "off"
DEFAULT = "default"
# An explicit TilingMode is just a TileSize triple.


@dataclass(frozen=True)
class TileEntry:
    unit: int
    tile: Box


class TileSchedule:
    def __init__(self, entries: list[TileEntry], unit_boxes: list[Box], nghost: int):
        self.entries = entries
        self.unit_boxes = unit_boxes
        self.nghost = nghost
        self._work_cache: dict = {}

    def __len__(self) -> int:
        return len(self.entries)

    def max_tile_extents(self) -> tuple[int, int, int]:
        ex = [1, 1, 1]
        for e in self.entries:
            for d in range(3):
                ex[d] = max(ex[d], e.tile.extents[d])
        return tuple(ex)  # type: ignore[return-value]

    def worker_runs(self, worker_count: int, worker_id: int):
        """Contiguous runs of same-unit entries in this worker's range, as
        (unit, tiles int64 array) pairs; cached since schedules are immutable."""
        key = (worker_count, worker_id)
        if key not in self._work_cache:
            lo, hi = partition(len(self.entries), worker_count, worker_id)
            runs = []
            pos = lo
            while pos < hi:
                unit = self.entries[pos].unit
                end = pos
                while end < hi and self.entries[end].unit == unit:
                    end += 1
                runs.append((unit, tiles_array([e.tile for e in self.entries[pos:end]])))
                pos = end
            self._work_cache[key] = runs
        return self._work_cache[key]


def build_schedule(mf, mode=OFF, default_tile_size: TileSize = DEFAULT_TILE_SIZE) -> TileSchedule:
    """Enumerate (unit, tile) pairs for a MultiFab under a tiling mode.

    mode is "off" (one tile per unit), "default" (use default_tile_size), or
    an explicit tile-size triple.
    """
    if mode == OFF:
        ts = None
    elif mode == DEFAULT:
        ts = check_tile_size(default_tile_size)
    else:
        ts = check_tile_size(mode)
    entries = []
    unit_boxes = []
    for u, unit in enumerate(mf.units):
        unit_boxes.append(unit.valid)
        if ts is None:
            entries.append(TileEntry(u, unit.valid))
        else:
            for t in decompose(unit.valid, ts):
                entries.append(TileEntry(u, t))
    return TileSchedule(entries, unit_boxes, mf.nghost)


def partition(n_tiles: int, worker_count: int, worker_id: int) -> tuple[int, int]:
    """Static contiguous [start, stop) range of tiles for one worker.

    The first n_tiles % worker_count workers get the larger share.
    """
    if worker_count < 1 or not 0 <= worker_id < worker_count:
        raise ValueError(f"bad worker {worker_id}/{worker_count}")
    base, rem = divmod(n_tiles, worker_count)
    start = worker_id * base + min(worker_id, rem)
    stop = start + base + (1 if worker_id < rem else 0)
    return start, stop


class TileCursor:
    """One worker's view of a schedule position."""

    def __init__(self, schedule: TileSchedule, pos: int, worker_id: int = 0, worker_count: int = 1):
        self.schedule = schedule
        self.pos = pos
        self.worker_id = worker_id
        self.worker_count = worker_count

    def _entry(self) -> TileEntry:
        if not 0 <= self.pos < len(self.schedule):
            raise IndexError("cursor exhausted")
        return self.schedule.entries[self.pos]

    def tilebox(self) -> Box:
        return self._entry().tile

    def validbox(self) -> Box:
        return self.schedule.unit_boxes[self._entry().unit]

    def growntilebox(self, ng: int) -> Box:
        """Tile extended by ng only on faces that coincide with the unit faces.

        Grown tile boxes from one unit stay pairwise disjoint and cover
        grow(unit, ng).
        """
        if ng > self.schedule.nghost:
            raise ValueError(f"ng={ng} exceeds nghost={self.schedule.nghost}")
        tile = self.tilebox()
        valid = self.validbox()
        lo = list(tile.lo)
        hi = list(tile.hi)
        for d in range(3):
            if tile.lo[d] == valid.lo[d]:
                lo[d] -= ng
            if tile.hi[d] == valid.hi[d]:
                hi[d] += ng
        return Box(tuple(lo), tuple(hi))

    def nodaltilebox(self, direction: int) -> Box:
        """Face-type tile box in `direction`, trimmed so that per-unit face
        boxes are disjoint and cover the face conversion of the unit."""
        tile = self.tilebox()
        valid = self.validbox()
        fb = to_face(tile, direction)
        if tile.hi[direction] != valid.hi[direction]:
            hi = list(fb.hi)
            hi[direction] -= 1
            fb = Box(fb.lo, tuple(hi), fb.itype)
        return fb


def parallel_for_tiles(schedule: TileSchedule, worker_count: int, body) -> None:
    """Run body(cursor) once per schedule entry, statically partitioned.

    Entries are visited in ascending order within a worker; there is no
    ordering guarantee across workers.  The first body exception is re-raised
    after all workers have stopped.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    n = len(schedule)

    def work(w: int, errors: list):
        start, stop = partition(n, worker_count, w)
        try:
            for pos in range(start, stop):
                body(TileCursor(schedule, pos, w, worker_count))
        except BaseException as exc:  # noqa: BLE001 - propagated to caller
            errors.append(exc)

    if worker_count == 1:
        errors: list = []
        work(0, errors)
    else:
        errors = []
        threads = [
            threading.Thread(target=work, args=(w, errors)) for w in range(worker_count)
        ]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    if errors:
        raise errors[0]


class Arena:
    """Grow-only scratch buffer for one worker.

    Acquisitions are live until reset(); after the first iteration the
    capacity stays flat, so repeated acquire/reset cycles do not allocate.
    """

    def __init__(self):
        self._buf = np.empty(0)
        self._used = 0  # doubles
        self._high_water = 0
        self._owner: int | None = None

    def _check_owner(self):
        ident = threading.get_ident()
        if self._owner is None:
            self._owner = ident
        elif self._owner != ident:
            raise RuntimeError("arena accessed from a thread other than its owner")

    def acquire(self, nbytes: int) -> np.ndarray:
        """Raw byte-sized acquisition, returned as a float64 array view."""
        n = (nbytes + 7) // 8
        return self.acquire_doubles(n)

    def acquire_doubles(self, n: int) -> np.ndarray:
        self._check_owner()
        need = self._used + n
        if need > self._buf.size:
            new = np.empty(max(need, self._buf.size * 2))
            new[: self._used] = self._buf[: self._used]
            self._buf = new
        out = self._buf[self._used : need]
        self._used = need
        self._high_water = max(self._high_water, need)
        return out

    def acquire_f64(self, shape: tuple[int, ...]) -> np.ndarray:
        """Column-major float64 scratch array of the given shape."""
        n = 1
        for s in shape:
            n *= s
        return self.acquire_doubles(n).reshape(shape, order="F")

    def reset(self) -> None:
        self._check_owner()
        self._used = 0

    def release_owner(self) -> None:
        self._owner = None

    @property
    def high_water_bytes(self) -> int:
        return self._high_water * 8


class ArenaPool:
    """Per-worker arenas; worker w may only touch arena w from its own thread."""

    def __init__(self, worker_count: int):
        self.arenas = [Arena() for _ in range(worker_count)]

    def acquire(self, worker_id: int, nbytes: int) -> np.ndarray:
        return self.arenas[worker_id].acquire(nbytes)

    def reset(self, worker_id: int) -> None:
        self.arenas[worker_id].reset()

    def high_water_bytes(self) -> int:
        return max((a.high_water_bytes for a in self.arenas), default=0)

    def release_owners(self) -> None:
        for a in self.arenas:
            a.release_owner()
