"""Benchmark stencil kernels: flux-form heat equation and a 9-point
8th-order Laplacian with ghost width 4.

Both steppers double-buffer (u_old read-only, u_new fully overwritten in the
valid region), which is what makes results bitwise independent of tile
order, worker count and layout.  Flux scratch comes from per-worker arenas
and is sized to the largest tile, never the grid.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np

from . import compiled
from .box import Box
from .fab import FArrayBox
from .iterator import ArenaPool, TileSchedule, partition
from .level import Geometry, MultiFab


@dataclass(frozen=True)
class HeatParams:
    diffusivity: float
    dt: float
    dx: tuple[float, float, float]

    def __post_init__(self):
        if self.diffusivity <= 0 or self.dt <= 0 or any(d <= 0 for d in self.dx):
            raise ValueError("diffusivity, dt and dx must all be positive")

    @property
    def stability_limit(self) -> float:
        return 1.0 / (2.0 * self.diffusivity * sum(1.0 / d**2 for d in self.dx))

    @staticmethod
    def stable(diffusivity: float, dx, safety: float = 0.9) -> "HeatParams":
        """Forward-Euler-stable parameters: dt = safety * stability bound."""
        if isinstance(dx, (int, float)):
            dx = (float(dx),) * 3
        limit = 1.0 / (2.0 * diffusivity * sum(1.0 / d**2 for d in dx))
        return HeatParams(diffusivity, safety * limit, tuple(dx))


@dataclass(frozen=True)
class StencilCoeffs8:
    """Centered second-derivative weights for offsets 0, +-1 .. +-4."""

    c0: float
    c1: float
    c2: float
    c3: float
    c4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2, self.c3, self.c4])

    def weights9(self) -> np.ndarray:
        c = self.as_array()
        return np.array([c[4], c[3], c[2], c[1], c[0], c[1], c[2], c[3], c[4]])


def derive_coeffs8() -> StencilCoeffs8:
    """Solve the even Taylor-moment system for the 9-point second derivative.

    Conditions: sum of weights 0; second moment 2; moments 4, 6, 8 vanish.
    Exact for polynomials through degree 9.
    """
    moments = [0, 2, 4, 6, 8]
    A = np.zeros((5, 5))
    rhs = np.zeros(5)
    for r, m in enumerate(moments):
        A[r, 0] = 1.0 if m == 0 else 0.0
        for n in range(1, 5):
            A[r, n] = 2.0 * n**m
        if m == 2:
            rhs[r] = 2.0
    c = np.linalg.solve(A, rhs)
    return StencilCoeffs8(*c)


def heat_flux(
    u: FArrayBox, face_box: Box, direction: int, dx: float, out: np.ndarray | None = None
) -> np.ndarray:
    """F(face) = (u(high cell) - u(low cell)) / dx for every face in face_box."""
    if not face_box.itype[direction]:
        raise ValueError(f"face box must be node-centered in direction {direction}")
    # Face f reads cells f-1 and f, so faces [lo, hi] touch cells [lo-1, hi].
    cells = Box(
        tuple(l - (1 if d == direction else 0) for d, l in enumerate(face_box.lo)),
        face_box.hi,
    )
    if not u.abox.contains(cells):
        raise ValueError(
            f"flux on {face_box} needs cells {cells}; fab only covers {u.abox}"
            " (at least one filled ghost cell is required)"
        )
    ex = face_box.extents
    if out is None:
        out = np.empty(ex, order="F")
    dxi = 1.0 / dx
    au = u.abox.lo
    u3 = u.comp(0)
    lo = face_box.lo
    hi = face_box.hi
    if direction == 0:
        compiled.flux_x(u3, au[0], au[1], au[2], out, lo[0], lo[1], lo[2],
                        lo[0], lo[1], hi[0] - 1, hi[1], lo[2], hi[2], dxi)
    elif direction == 1:
        compiled.flux_y(u3, au[0], au[1], au[2], out, lo[0], lo[1], lo[2],
                        lo[0], lo[1], hi[0], hi[1] - 1, lo[2], hi[2], dxi)
    else:
        compiled.flux_z(u3, au[0], au[1], au[2], out, lo[0], lo[1], lo[2],
                        lo[0], lo[1], hi[0], hi[1], lo[2], hi[2], dxi)
    return out


def heat_divergence_update(
    u_new: FArrayBox,
    u_old: FArrayBox,
    fluxes: tuple[np.ndarray, np.ndarray, np.ndarray],
    tile: Box,
    params: HeatParams,
) -> None:
    """u_new = u_old + dt*D*div(F) on every cell of the tile.

    The flux arrays must be indexed from tile.lo (the heat_flux output for
    the tile's three face boxes).
    """
    fx, fy, fz = fluxes
    dxi = tuple(1.0 / d for d in params.dx)
    au = u_old.abox.lo
    if u_new.abox.lo != au:
        raise ValueError("u_new and u_old must share an allocation box")
    compiled.divergence(
        u_new.comp(0), u_old.comp(0), au[0], au[1], au[2],
        fx, fy, fz, tile.lo[0], tile.lo[1], tile.lo[2],
        tile.lo[0], tile.lo[1], tile.hi[0], tile.hi[1], tile.lo[2], tile.hi[2],
        dxi[0], dxi[1], dxi[2], params.diffusivity * params.dt,
    )


def _check_single_component(*mfs: MultiFab) -> None:
    for mf in mfs:
        if mf.ncomp != 1:
            raise ValueError("stencil kernels operate on single-component MultiFabs")


def _run_workers(worker_count: int, fn) -> None:
    if worker_count == 1:
        fn(0)
        return
    errors: list = []

    def wrap(w):
        try:
            fn(w)
        except BaseException as exc:  # noqa: BLE001
            errors.append(exc)

    threads = [threading.Thread(target=wrap, args=(w,)) for w in range(worker_count)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        raise errors[0]


def heat_step(
    mf_new: MultiFab,
    mf_old: MultiFab,
    geom: Geometry,
    params: HeatParams,
    schedule: TileSchedule,
    workers: int = 1,
    arenas: ArenaPool | None = None,
    verify: bool = False,
) -> None:
    """One forward Euler step on every valid cell; ghosts of mf_old must be
    filled by the caller beforehand."""
    _check_single_component(mf_new, mf_old)
    if mf_old.nghost < 1:
        raise ValueError("heat kernel requires nghost >= 1")
    if verify and params.dt > params.stability_limit:
        warnings.warn(
            f"dt={params.dt} exceeds stability bound {params.stability_limit}",
            stacklevel=2,
        )
    pool = arenas if arenas is not None else ArenaPool(workers)
    tx, ty, tz = schedule.max_tile_extents()
    dxi = tuple(1.0 / d for d in params.dx)
    dtD = params.diffusivity * params.dt

    def work(w: int):
        arena = pool.arenas[w]
        fx = arena.acquire_f64((tx + 1, ty, tz))
        fy = arena.acquire_f64((tx, ty + 1, tz))
        fz = arena.acquire_f64((tx, ty, tz + 1))
        for unit, tiles in schedule.worker_runs(workers, w):
            uo = mf_old.units[unit].fab
            un = mf_new.units[unit].fab
            au = uo.abox.lo
            compiled.heat_tiles(
                un.comp(0), uo.comp(0), au[0], au[1], au[2],
                fx, fy, fz, tiles, dxi[0], dxi[1], dxi[2], dtD,
            )
        arena.reset()

    _run_workers(workers, work)
    pool.release_owners()


def wide4_step(
    mf_new: MultiFab,
    mf_old: MultiFab,
    geom: Geometry,
    diffusivity: float,
    dt: float,
    schedule: TileSchedule,
    workers: int = 1,
    coeffs: StencilCoeffs8 | None = None,
) -> None:
    """u_new = u_old + dt*D*(8th-order Laplacian); needs 4 filled ghost cells."""
    _check_single_component(mf_new, mf_old)
    if mf_old.nghost < 4:
        raise ValueError("wide4 kernel requires nghost >= 4")
    c = coeffs if coeffs is not None else derive_coeffs8()
    dxi2 = tuple(1.0 / d**2 for d in geom.dx)
    dtD = diffusivity * dt

    def work(w: int):
        for unit, tiles in schedule.worker_runs(workers, w):
            uo = mf_old.units[unit].fab
            un = mf_new.units[unit].fab
            au = uo.abox.lo
            compiled.wide4_tiles(
                un.comp(0), uo.comp(0), au[0], au[1], au[2],
                c.c0, c.c1, c.c2, c.c3, c.c4, tiles,
                dxi2[0], dxi2[1], dxi2[2], dtD,
            )

    _run_workers(workers, work)


def loop_heat_step(
    mf_new: MultiFab,
    mf_old: MultiFab,
    geom: Geometry,
    params: HeatParams,
    workers: int = 1,
    scratch: dict | None = None,
) -> None:
    """Fine-grained baseline: untiled four-loop kernel with grid-sized flux
    arrays, each loop's outermost (z) dimension split statically over workers
    with a join between loops."""
    _check_single_component(mf_new, mf_old)
    if mf_old.nghost < 1:
        raise ValueError("heat kernel requires nghost >= 1")
    dxi = tuple(1.0 / d for d in params.dx)
    dtD = params.diffusivity * params.dt
    if scratch is None:
        scratch = {}
    for unit in range(len(mf_old.units)):
        uo = mf_old.units[unit].fab
        un = mf_new.units[unit].fab
        valid = mf_old.units[unit].valid
        ex = valid.extents
        if unit not in scratch:
            scratch[unit] = (
                np.empty((ex[0] + 1, ex[1], ex[2]), order="F"),
                np.empty((ex[0], ex[1] + 1, ex[2]), order="F"),
                np.empty((ex[0], ex[1], ex[2] + 1), order="F"),
            )
        fx, fy, fz = scratch[unit]
        au = uo.abox.lo
        lo, hi = valid.lo, valid.hi
        u3, n3 = uo.comp(0), un.comp(0)

        def run_flux(fn, arr, klo, khi, dxi_d):
            def body(w):
                a, b = partition(khi - klo + 1, workers, w)
                if a < b:
                    fn(u3, au[0], au[1], au[2], arr, lo[0], lo[1], lo[2],
                       lo[0], lo[1], hi[0], hi[1], klo + a, klo + b - 1, dxi_d)

            _run_workers(workers, body)

        run_flux(compiled.flux_x, fx, lo[2], hi[2], dxi[0])
        run_flux(compiled.flux_y, fy, lo[2], hi[2], dxi[1])
        run_flux(compiled.flux_z, fz, lo[2], hi[2] + 1, dxi[2])

        def div_body(w):
            a, b = partition(hi[2] - lo[2] + 1, workers, w)
            if a < b:
                compiled.divergence(
                    n3, u3, au[0], au[1], au[2], fx, fy, fz,
                    lo[0], lo[1], lo[2], lo[0], lo[1], hi[0], hi[1],
                    lo[2] + a, lo[2] + b - 1, dxi[0], dxi[1], dxi[2], dtD,
                )

        _run_workers(workers, div_body)


def loop_wide4_step(
    mf_new: MultiFab,
    mf_old: MultiFab,
    geom: Geometry,
    diffusivity: float,
    dt: float,
    workers: int = 1,
    coeffs: StencilCoeffs8 | None = None,
) -> None:
    """Fine-grained baseline for the wide stencil: z loop split over workers."""
    _check_single_component(mf_new, mf_old)
    if mf_old.nghost < 4:
        raise ValueError("wide4 kernel requires nghost >= 4")
    c = coeffs if coeffs is not None else derive_coeffs8()
    dxi2 = tuple(1.0 / d**2 for d in geom.dx)
    dtD = diffusivity * dt
    for unit in range(len(mf_old.units)):
        uo = mf_old.units[unit].fab
        un = mf_new.units[unit].fab
        valid = mf_old.units[unit].valid
        au = uo.abox.lo
        lo, hi = valid.lo, valid.hi

        def body(w):
            a, b = partition(hi[2] - lo[2] + 1, workers, w)
            if a < b:
                compiled.wide4_range(
                    un.comp(0), uo.comp(0), au[0], au[1], au[2],
                    c.c0, c.c1, c.c2, c.c3, c.c4,
                    lo[0], lo[1], hi[0], hi[1], lo[2] + a, lo[2] + b - 1,
                    dxi2[0], dxi2[1], dxi2[2], dtD,
                )

        _run_workers(workers, body)


def init_cosine(mf: MultiFab, geom: Geometry, modes=(1, 1, 1), offset: float = 0.0) -> None:
    """Valid data = offset + product of per-dimension cosines at cell centers.

    A discrete eigenfunction of the periodic stencils, so single steps have a
    closed-form amplification factor.
    """
    dom = geom.domain
    n = dom.extents
    m = modes

    def fn(i, j, k):
        return offset + (
            np.cos(2.0 * np.pi * m[0] * (i - dom.lo[0] + 0.5) / n[0])
            * np.cos(2.0 * np.pi * m[1] * (j - dom.lo[1] + 0.5) / n[1])
            * np.cos(2.0 * np.pi * m[2] * (k - dom.lo[2] + 0.5) / n[2])
        )

    mf.set_from_function(fn)


def heat_amplification(params: HeatParams, geom: Geometry, modes=(1, 1, 1)) -> float:
    """Exact discrete per-step amplification of a cosine-product mode."""
    n = geom.domain.extents
    g = 1.0
    for d in range(3):
        theta = 2.0 * math.pi * modes[d] / n[d]
        g += (
            params.diffusivity
            * params.dt
            * (2.0 * math.cos(theta) - 2.0)
            / params.dx[d] ** 2
        )
    return g


def wide4_amplification(
    diffusivity: float,
    dt: float,
    geom: Geometry,
    modes=(1, 1, 1),
    coeffs: StencilCoeffs8 | None = None,
) -> float:
    c = (coeffs if coeffs is not None else derive_coeffs8()).as_array()
    n = geom.domain.extents
    g = 1.0
    for d in range(3):
        theta = 2.0 * math.pi * modes[d] / n[d]
        s = c[0] + 2.0 * sum(c[k] * math.cos(k * theta) for k in range(1, 5))
        g += diffusivity * dt * s / geom.dx[d] ** 2
    return g


def wide4_stable_dt(diffusivity: float, dx, safety: float = 0.9) -> float:
    """dt at `safety` times the forward Euler bound for the 9-point Laplacian."""
    if isinstance(dx, (int, float)):
        dx = (float(dx),) * 3
    c = derive_coeffs8().as_array()
    s_pi = abs(c[0] + 2.0 * sum(c[k] * math.cos(k * math.pi) for k in range(1, 5)))
    lam = diffusivity * s_pi * sum(1.0 / d**2 for d in dx)
    return safety * 2.0 / lam
