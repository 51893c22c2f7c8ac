"""Contiguous multi-component double-precision storage on a single box.

Data live in one flat 1D array reshaped to (nx, ny, nz, ncomp) in
column-major order: x fastest, component slowest.  Checked accessors are for
tests and debugging; kernels index the `.data` view directly.
"""

from __future__ import annotations

import struct

import numpy as np

from .box import Box, intersect

_HEADER = struct.Struct("<7q")  # lo.xyz, hi.xyz, ncomp


class FArrayBox:
    def __init__(self, abox: Box, ncomp: int = 1, zero: bool = True):
        if abox.is_empty:
            raise ValueError("FArrayBox requires a non-empty box")
        if ncomp < 1:
            raise ValueError(f"ncomp must be positive, got {ncomp}")
        self.abox = abox
        self.ncomp = ncomp
        nx, ny, nz = abox.extents
        n = nx * ny * nz * ncomp
        self._flat = np.zeros(n) if zero else np.empty(n)
        # Column-major view of the flat storage (shares memory).
        self.data = self._flat.reshape((nx, ny, nz, ncomp), order="F")

    @property
    def flat(self) -> np.ndarray:
        return self._flat

    def offset(self, i: int, j: int, k: int, c: int = 0) -> int:
        """Flat index of element (i, j, k, c) per the column-major layout."""
        self._check(i, j, k, c)
        lo = self.abox.lo
        nx, ny, nz = self.abox.extents
        return (i - lo[0]) + nx * ((j - lo[1]) + ny * ((k - lo[2]) + nz * c))

    def _check(self, i, j, k, c):
        if not self.abox.contains_point((i, j, k)):
            raise IndexError(f"index ({i},{j},{k}) outside {self.abox}")
        if not 0 <= c < self.ncomp:
            raise IndexError(f"component {c} out of range [0,{self.ncomp})")

    def at(self, i: int, j: int, k: int, c: int = 0) -> float:
        self._check(i, j, k, c)
        lo = self.abox.lo
        return self.data[i - lo[0], j - lo[1], k - lo[2], c]

    def set_at(self, i: int, j: int, k: int, v: float, c: int = 0) -> None:
        self._check(i, j, k, c)
        lo = self.abox.lo
        self.data[i - lo[0], j - lo[1], k - lo[2], c] = v

    def view(self, region: Box, c0: int = 0, nc: int | None = None) -> np.ndarray:
        """Unchecked-speed numpy view of `region`; region must lie in abox."""
        if not self.abox.contains(region):
            raise ValueError(f"region {region} not contained in {self.abox}")
        if nc is None:
            nc = self.ncomp - c0
        if c0 < 0 or c0 + nc > self.ncomp:
            raise ValueError(f"components [{c0},{c0 + nc}) out of range")
        lo = self.abox.lo
        sl = tuple(
            slice(region.lo[d] - lo[d], region.hi[d] - lo[d] + 1) for d in range(3)
        )
        return self.data[sl + (slice(c0, c0 + nc),)]

    def comp(self, c: int = 0) -> np.ndarray:
        """3D view of one whole component (ghosts included)."""
        return self.data[:, :, :, c]

    def fill(self, v: float, region: Box | None = None, c: int | None = None) -> None:
        if region is None:
            region = self.abox
        if c is None:
            self.view(region)[...] = v
        else:
            self.view(region, c, 1)[...] = v

    def write(self, fh) -> None:
        """Flat binary dump: header (abox lo/hi, ncomp), then raw float64 payload."""
        fh.write(_HEADER.pack(*self.abox.lo, *self.abox.hi, self.ncomp))
        fh.write(self._flat.tobytes())

    @staticmethod
    def read(fh) -> "FArrayBox":
        vals = _HEADER.unpack(fh.read(_HEADER.size))
        abox = Box(vals[0:3], vals[3:6])
        fab = FArrayBox(abox, vals[6], zero=False)
        fab._flat[:] = np.frombuffer(fh.read(fab._flat.nbytes), dtype=np.float64)
        return fab


def copy_region(
    dst: FArrayBox, dbox: Box, src: FArrayBox, sbox: Box, c0: int = 0, nc: int | None = None
) -> None:
    """Copy components [c0, c0+nc) of src on sbox onto dst on dbox.

    The boxes must have identical extents; cells correspond in index order.
    """
    if nc is None:
        nc = min(dst.ncomp, src.ncomp) - c0
    if nc == 0:
        return
    if dbox.extents != sbox.extents:
        raise ValueError(f"extent mismatch: {dbox} vs {sbox}")
    dst.view(dbox, c0, nc)[...] = src.view(sbox, c0, nc)


def intersect_copy(dst: FArrayBox, src: FArrayBox, c0: int = 0, nc: int | None = None) -> None:
    """Copy src onto dst wherever their boxes overlap (same index space)."""
    isect = intersect(dst.abox, src.abox)
    if not isect.is_empty:
        copy_region(dst, isect, src, isect, c0, nc)
