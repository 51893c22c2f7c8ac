"""Benchmark harness: configure, verify, time and report stencil runs.

The timed loop is `steps x (fill ghosts; kernel step)` with each phase under
a monotonic clock; one-time setup (allocation, JIT warmup, plan building) is
excluded.  Reports serialize to CSV with a byte-stable header so tile-size
sweeps and thread scalings can be tabulated and plotted.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace

import numpy as np

from .box import Box, TileSize, check_tile_size
from .iterator import DEFAULT_TILE_SIZE, ArenaPool, build_schedule
from .kernels import (
    HeatParams,
    derive_coeffs8,
    heat_amplification,
    heat_step,
    init_cosine,
    loop_heat_step,
    loop_wide4_step,
    wide4_amplification,
    wide4_stable_dt,
    wide4_step,
)
from .level import (
    CONTIGUOUS,
    REGIONAL,
    BoxArray,
    Geometry,
    MultiFab,
    build_fill_plan,
    fill_boundary,
)

CSV_HEADER = (
    "kernel,layout,threading,threads,tile_x,tile_y,tile_z,steps,"
    "kernel_seconds,fill_seconds,total_seconds,checksum,arena_bytes"
)

# Verification gates: max relative error of the 10-step run against the
# closed-form discrete amplification.
VERIFY_TOL = {"heat": 1e-13, "wide4": 1e-12}


class VerificationError(Exception):
    def __init__(self, kernel: str, max_err: float, tol: float):
        super().__init__(
            f"{kernel} verification failed: max relative error {max_err:.3e} > {tol:.0e}"
        )
        self.max_err = max_err


@dataclass(frozen=True)
class RunConfig:
    nx: int = 128
    ny: int = 128
    nz: int = 128
    max_grid_size: int | None = None  # None: one grid spanning the domain
    tile_size: TileSize | None = DEFAULT_TILE_SIZE  # None: tiling off
    layout: str = CONTIGUOUS
    region_size: TileSize = (64, 64, 64)
    threads: int = 1
    steps: int = 1000
    kernel: str = "heat"
    threading: str = "tile"
    periodic: tuple[bool, bool, bool] = (True, True, True)
    verify: bool = False
    csv: str | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1 or self.steps < 0 or self.threads < 1:
            raise ValueError("extents and threads must be positive, steps >= 0")
        if self.kernel not in ("heat", "wide4"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.threading not in ("tile", "loop"):
            raise ValueError(f"unknown threading mode {self.threading!r}")
        if self.layout not in (CONTIGUOUS, REGIONAL):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.tile_size is not None:
            object.__setattr__(self, "tile_size", check_tile_size(self.tile_size))
        if self.threading == "loop" and self.tile_size is not None:
            raise ValueError("loop-level threading requires --tile-size off")


@dataclass
class RunReport:
    config: RunConfig
    kernel_seconds: float
    fill_seconds: float
    total_seconds: float
    kernel_calls: int
    fill_calls: int
    checksum: float
    arena_bytes: int
    speedup: float | None = None


def _setup(config: RunConfig):
    n = (config.nx, config.ny, config.nz)
    domain = Box((0, 0, 0), (n[0] - 1, n[1] - 1, n[2] - 1))
    dx = tuple(1.0 / v for v in n)
    geom = Geometry(domain, config.periodic, dx)
    mgs = config.max_grid_size if config.max_grid_size else max(n)
    ba = BoxArray.chop(domain, mgs)
    nghost = 1 if config.kernel == "heat" else 4
    region = config.region_size if config.layout == REGIONAL else None
    mf = MultiFab(ba, 1, nghost, config.layout, region)
    init_cosine(mf, geom, (1, 1, 1))
    return geom, mf


def _steppers(config: RunConfig, geom: Geometry, mf: MultiFab):
    """Returns (step_fn(old, new), arena_bytes_fn)."""
    D = 1.0
    if config.kernel == "heat":
        params = HeatParams.stable(D, geom.dx)
        if config.threading == "tile":
            schedule = build_schedule(
                mf, config.tile_size if config.tile_size is not None else "off"
            )
            pool = ArenaPool(config.threads)

            def step(old, new):
                heat_step(new, old, geom, params, schedule, config.threads, pool)

            return step, pool.high_water_bytes
        scratch: dict = {}

        def step(old, new):
            loop_heat_step(new, old, geom, params, config.threads, scratch)

        return step, lambda: sum(a.nbytes for f in scratch.values() for a in f)
    dt = wide4_stable_dt(D, geom.dx)
    coeffs = derive_coeffs8()
    if config.threading == "tile":
        schedule = build_schedule(
            mf, config.tile_size if config.tile_size is not None else "off"
        )

        def step(old, new):
            wide4_step(new, old, geom, D, dt, schedule, config.threads, coeffs)

        return step, lambda: 0

    def step(old, new):
        loop_wide4_step(new, old, geom, D, dt, config.threads, coeffs)

    return step, lambda: 0


def verify_kernel(kernel: str, threads: int = 1) -> float:
    """Reduced-size oracle: 32^3, 10 steps, single cosine mode, compared to
    the closed-form discrete amplification factor.  Returns the max relative
    error; raises VerificationError beyond tolerance."""
    config = RunConfig(
        nx=32, ny=32, nz=32, steps=10, kernel=kernel, threads=threads,
        tile_size=(16, 8, 8),
    )
    geom, mf = _setup(config)
    u0 = mf.grid_valid_array(0).copy()
    report = _timed_loop(config, geom, mf)[1]
    D = 1.0
    if kernel == "heat":
        g = heat_amplification(HeatParams.stable(D, geom.dx), geom)
    else:
        g = wide4_amplification(D, wide4_stable_dt(D, geom.dx), geom)
    expect = g ** config.steps * u0
    got = mf.grid_valid_array(0)
    err = float(np.max(np.abs(got - expect)) / np.max(np.abs(expect)))
    tol = VERIFY_TOL[kernel]
    if err > tol:
        raise VerificationError(kernel, err, tol)
    return err


def _timed_loop(config: RunConfig, geom: Geometry, mf: MultiFab):
    """Run the step loop on mf in place; returns (mf_final, report)."""
    old = mf
    new = mf.clone_empty()
    plan = build_fill_plan(old, geom)
    step, arena_bytes = _steppers(config, geom, old)

    # Warm the JIT outside the timed region.
    if config.steps > 0:
        fill_boundary(old, geom, plan, config.threads)
        step(old, new)

    kernel_seconds = 0.0
    fill_seconds = 0.0
    t_start = time.perf_counter()
    for _ in range(config.steps):
        t0 = time.perf_counter()
        fill_boundary(old, geom, plan, config.threads)
        t1 = time.perf_counter()
        step(old, new)
        t2 = time.perf_counter()
        fill_seconds += t1 - t0
        kernel_seconds += t2 - t1
        old, new = new, old
    total = time.perf_counter() - t_start

    report = RunReport(
        config=config,
        kernel_seconds=kernel_seconds,
        fill_seconds=fill_seconds,
        total_seconds=total,
        kernel_calls=config.steps,
        fill_calls=config.steps,
        checksum=old.reduce_sum(0),
        arena_bytes=arena_bytes(),
    )
    # Hand the final state back in `mf`'s units for callers that inspect it.
    if old is not mf:
        for a, b in zip(mf.units, old.units):
            a.fab.data[...] = b.fab.data
    return mf, report


def run(config: RunConfig) -> RunReport:
    if config.verify:
        verify_kernel(config.kernel)
    geom, mf = _setup(config)
    return _timed_loop(config, geom, mf)[1]


def sweep(
    base: RunConfig,
    tile_sizes: list[TileSize | None] | None = None,
    thread_counts: list[int] | None = None,
) -> list[RunReport]:
    """Run a tile-size or thread-count axis; speedups are relative to the
    first variant's kernel time."""
    if tile_sizes is not None:
        variants = [replace(base, tile_size=ts) for ts in tile_sizes]
    elif thread_counts is not None:
        variants = [replace(base, threads=t) for t in thread_counts]
    else:
        raise ValueError("sweep needs a tile-size or thread axis")
    if not variants:
        raise ValueError("sweep axis must be non-empty")
    if base.verify:
        verify_kernel(base.kernel)
    reports = []
    for cfg in variants:
        reports.append(run(replace(cfg, verify=False)))
    anchor = reports[0].kernel_seconds
    for r in reports:
        r.speedup = anchor / r.kernel_seconds if r.kernel_seconds > 0 else 1.0
    return reports


def _csv_row(r: RunReport) -> str:
    c = r.config
    ts = c.tile_size if c.tile_size is not None else (0, 0, 0)
    fields = [
        c.kernel,
        c.layout,
        c.threading,
        str(c.threads),
        str(ts[0]),
        str(ts[1]),
        str(ts[2]),
        str(c.steps),
        f"{r.kernel_seconds:.6g}",
        f"{r.fill_seconds:.6g}",
        f"{r.total_seconds:.6g}",
        f"{r.checksum:.17g}",
        str(r.arena_bytes),
    ]
    return ",".join(fields)


def emit_csv(reports: list[RunReport], path: str) -> None:
    if not reports:
        raise ValueError("emit_csv requires at least one report")
    lines = [CSV_HEADER] + [_csv_row(r) for r in reports]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_config_file(path: str) -> dict:
    """Optional config file (JSON).  Known keys: tile_size ([x,y,z] or
    "off"), workers.  CLI flags override these values."""
    with open(path) as fh:
        return json.load(fh)
