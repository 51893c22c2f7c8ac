"""Numba-compiled loop nests shared by the kernels and reductions.

All functions release the GIL so tile-level worker threads can run them
concurrently.  Index arguments are global (index-space) coordinates; each
array comes with the global coordinate of its first element so kernels can
address grown boxes without slicing.

The flux and divergence loops are kept separate on purpose: the benchmark
measures the unfused four-loop structure.
"""

from __future__ import annotations

import numba
import numpy as np

NJIT = dict(nogil=True, cache=True, fastmath=False)


@numba.njit(**NJIT)
def serial_sum(a):
    """Strictly serial accumulation in x-fastest order (bit-reproducible)."""
    nx, ny, nz = a.shape
    total = 0.0
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                total += a[i, j, k]
    return total


@numba.njit(**NJIT)
def flux_x(u, au0, au1, au2, fx, af0, af1, af2,
           lo0, lo1, hi0, hi1, klo, khi, dxi):
    for k in range(klo, khi + 1):
        for j in range(lo1, hi1 + 1):
            for i in range(lo0, hi0 + 2):
                fx[i - af0, j - af1, k - af2] = (
                    u[i - au0, j - au1, k - au2] - u[i - 1 - au0, j - au1, k - au2]
                ) * dxi


@numba.njit(**NJIT)
def flux_y(u, au0, au1, au2, fy, af0, af1, af2,
           lo0, lo1, hi0, hi1, klo, khi, dxi):
    for k in range(klo, khi + 1):
        for j in range(lo1, hi1 + 2):
            for i in range(lo0, hi0 + 1):
                fy[i - af0, j - af1, k - af2] = (
                    u[i - au0, j - au1, k - au2] - u[i - au0, j - 1 - au1, k - au2]
                ) * dxi


@numba.njit(**NJIT)
def flux_z(u, au0, au1, au2, fz, af0, af1, af2,
           lo0, lo1, hi0, hi1, klo, khi, dxi):
    # klo..khi ranges over z *faces* here.
    for k in range(klo, khi + 1):
        for j in range(lo1, hi1 + 1):
            for i in range(lo0, hi0 + 1):
                fz[i - af0, j - af1, k - af2] = (
                    u[i - au0, j - au1, k - au2] - u[i - au0, j - au1, k - 1 - au2]
                ) * dxi


@numba.njit(**NJIT)
def divergence(unew, uold, au0, au1, au2,
               fx, fy, fz, af0, af1, af2,
               lo0, lo1, hi0, hi1, klo, khi,
               dxi0, dxi1, dxi2, dtD):
    for k in range(klo, khi + 1):
        for j in range(lo1, hi1 + 1):
            for i in range(lo0, hi0 + 1):
                a = i - af0
                b = j - af1
                c = k - af2
                unew[i - au0, j - au1, k - au2] = uold[i - au0, j - au1, k - au2] + dtD * (
                    (fx[a + 1, b, c] - fx[a, b, c]) * dxi0
                    + (fy[a, b + 1, c] - fy[a, b, c]) * dxi1
                    + (fz[a, b, c + 1] - fz[a, b, c]) * dxi2
                )


@numba.njit(**NJIT)
def heat_tiles(unew, uold, au0, au1, au2, fx, fy, fz, tiles,
               dxi0, dxi1, dxi2, dtD):
    """Run the four heat loops tile by tile; flux scratch is tile-offset."""
    for t in range(tiles.shape[0]):
        lo0 = tiles[t, 0]
        lo1 = tiles[t, 1]
        lo2 = tiles[t, 2]
        hi0 = tiles[t, 3]
        hi1 = tiles[t, 4]
        hi2 = tiles[t, 5]
        flux_x(uold, au0, au1, au2, fx, lo0, lo1, lo2, lo0, lo1, hi0, hi1, lo2, hi2, dxi0)
        flux_y(uold, au0, au1, au2, fy, lo0, lo1, lo2, lo0, lo1, hi0, hi1, lo2, hi2, dxi1)
        flux_z(uold, au0, au1, au2, fz, lo0, lo1, lo2, lo0, lo1, hi0, hi1, lo2, hi2 + 1, dxi2)
        divergence(unew, uold, au0, au1, au2, fx, fy, fz, lo0, lo1, lo2,
                   lo0, lo1, hi0, hi1, lo2, hi2, dxi0, dxi1, dxi2, dtD)


@numba.njit(**NJIT)
def wide4_range(unew, uold, au0, au1, au2,
                c0, c1, c2, c3, c4,
                lo0, lo1, hi0, hi1, klo, khi,
                dxi2_0, dxi2_1, dxi2_2, dtD):
    """9-point 8th-order Laplacian update on cells with z in [klo, khi]."""
    for k in range(klo, khi + 1):
        for j in range(lo1, hi1 + 1):
            for i in range(lo0, hi0 + 1):
                a = i - au0
                b = j - au1
                c = k - au2
                uc = uold[a, b, c]
                sx = (c0 * uc
                      + c1 * (uold[a - 1, b, c] + uold[a + 1, b, c])
                      + c2 * (uold[a - 2, b, c] + uold[a + 2, b, c])
                      + c3 * (uold[a - 3, b, c] + uold[a + 3, b, c])
                      + c4 * (uold[a - 4, b, c] + uold[a + 4, b, c]))
                sy = (c0 * uc
                      + c1 * (uold[a, b - 1, c] + uold[a, b + 1, c])
                      + c2 * (uold[a, b - 2, c] + uold[a, b + 2, c])
                      + c3 * (uold[a, b - 3, c] + uold[a, b + 3, c])
                      + c4 * (uold[a, b - 4, c] + uold[a, b + 4, c]))
                sz = (c0 * uc
                      + c1 * (uold[a, b, c - 1] + uold[a, b, c + 1])
                      + c2 * (uold[a, b, c - 2] + uold[a, b, c + 2])
                      + c3 * (uold[a, b, c - 3] + uold[a, b, c + 3])
                      + c4 * (uold[a, b, c - 4] + uold[a, b, c + 4]))
                unew[a, b, c] = uc + dtD * (sx * dxi2_0 + sy * dxi2_1 + sz * dxi2_2)


@numba.njit(**NJIT)
def wide4_tiles(unew, uold, au0, au1, au2,
                c0, c1, c2, c3, c4, tiles,
                dxi2_0, dxi2_1, dxi2_2, dtD):
    for t in range(tiles.shape[0]):
        wide4_range(unew, uold, au0, au1, au2, c0, c1, c2, c3, c4,
                    tiles[t, 0], tiles[t, 1], tiles[t, 3], tiles[t, 4],
                    tiles[t, 2], tiles[t, 5],
                    dxi2_0, dxi2_1, dxi2_2, dtD)


def tiles_array(boxes) -> np.ndarray:
    """Pack tile boxes into the (n, 6) int64 layout the drivers consume."""
    arr = np.empty((len(boxes), 6), dtype=np.int64)
    for t, b in enumerate(boxes):
        arr[t, 0:3] = b.lo
        arr[t, 3:6] = b.hi
    return arr
