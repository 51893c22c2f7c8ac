"""Acceptance gate: one test per criterion, each printing its measured result.

Criterion 7 (serial tiling benefit) asserts its stated 1.2x gate and reports
the measured ratio; on cache-rich single-core hosts the untiled kernel is
already cache-resident and the gate may not be reachable.  Criterion 8
(thread scaling) requires >= 8 cores and is skipped below that.
"""

import math
import os
from fractions import Fraction

import numpy as np
import pytest

from tilemesh.bench import CSV_HEADER, RunConfig, RunReport, emit_csv, run
from tilemesh.box import Box, grow, to_face
from tilemesh.iterator import TileCursor, build_schedule, partition
from tilemesh.kernels import (
    HeatParams,
    derive_coeffs8,
    heat_amplification,
    heat_step,
    init_cosine,
    wide4_step,
)
from tilemesh.level import (
    CONTIGUOUS,
    REGIONAL,
    BoxArray,
    Geometry,
    MultiFab,
    fill_boundary,
)

MAX_WORKERS = max(os.cpu_count() or 1, 1)


def mark_cover(boxes, target):
    lo = target.lo
    marks = np.zeros(target.extents, dtype=np.int32)
    for b in boxes:
        sl = tuple(slice(b.lo[d] - lo[d], b.hi[d] - lo[d] + 1) for d in range(3))
        marks[sl] += 1
    return bool(np.all(marks == 1))


def test_criterion_1_scheduling_example():
    """Per-grid tile counts (4,2,2,4), 4 workers -> the exact assignment."""
    grids = [
        Box((0, 0, 0), (7, 3, 3)),
        Box((0, 4, 0), (3, 7, 3)),
        Box((0, 8, 0), (3, 11, 3)),
        Box((0, 12, 0), (7, 15, 3)),
    ]
    mf = MultiFab(BoxArray(grids), 1, 0)
    sched = build_schedule(mf, (2, 4, 4))
    assert len(sched) == 12
    assignment = []
    for w in range(4):
        lo, hi = partition(len(sched), 4, w)
        assignment.append([sched.entries[p].unit for p in range(lo, hi)])
    assert assignment == [[0, 0, 0], [0, 1, 1], [2, 2, 3], [3, 3, 3]]
    print("criterion 1: PASS (worker->grid assignment "
          f"{assignment} matches the worked example)")


def test_criterion_2_tile_cover_properties():
    """>= 1000 randomized (grid, tile size) pairs; every cover exact."""
    rng = np.random.default_rng(2024)
    trials = 1000
    for _ in range(trials):
        hi = tuple(int(v) for v in rng.integers(0, 16, 3))
        grid = Box((0, 0, 0), hi)
        ts = tuple(int(v) for v in rng.integers(1, 9, 3))
        ng = int(rng.integers(0, 3))
        mf = MultiFab(BoxArray([grid]), 1, ng, zero=False)
        sched = build_schedule(mf, ts)
        cursors = [TileCursor(sched, p) for p in range(len(sched))]
        assert mark_cover([c.tilebox() for c in cursors], grid)
        grown_target = grow(grid, ng) if ng else grid
        assert mark_cover([c.growntilebox(ng) for c in cursors], grown_target)
        for d in range(3):
            assert mark_cover([c.nodaltilebox(d) for c in cursors], to_face(grid, d))
    print(f"criterion 2: PASS ({trials} randomized cover trials, "
          "5 properties each, zero failures)")


SENTINEL = -12345.6789


def _random_disjoint_grids(rng, domain):
    mgs = tuple(int(v) for v in rng.integers(2, 9, 3))
    candidates = BoxArray.chop(domain, mgs).boxes
    keep = [b for b in candidates if rng.random() < 0.7]
    return keep if keep else [candidates[0]]


def _ghost_check_vectorized(mf, geom):
    """Every cell of every allocation box: fillable ghosts (and valid cells)
    hold the periodic image of the linear field, unfillable ghosts hold the
    sentinel."""
    dom = geom.domain
    n = dom.extents
    valids = [u.valid for u in mf.units]
    for u in mf.units:
        b = u.fab.abox
        axes = [np.arange(b.lo[d], b.hi[d] + 1) for d in range(3)]
        W = list(np.meshgrid(*axes, indexing="ij"))
        for d in range(3):
            if geom.periodic[d]:
                W[d] = dom.lo[d] + (W[d] - dom.lo[d]) % n[d]
        covered = np.zeros(W[0].shape, dtype=bool)
        for v in valids:
            m = np.ones(W[0].shape, dtype=bool)
            for d in range(3):
                m &= (W[d] >= v.lo[d]) & (W[d] <= v.hi[d])
            covered |= m
        expect = np.where(covered, W[0] + 10.0 * W[1] + 100.0 * W[2], SENTINEL)
        got = u.fab.view(b, 0, 1)[..., 0]
        assert np.array_equal(got, expect)


def test_criterion_3_ghost_fill_oracle():
    """>= 200 randomized BoxArrays vs the brute-force periodic-image search."""
    rng = np.random.default_rng(77)
    trials = 200
    for _ in range(trials):
        dom_hi = tuple(int(v) for v in rng.integers(3, 16, 3))
        domain = Box((0, 0, 0), dom_hi)
        geom = Geometry(domain, tuple(bool(v) for v in rng.integers(0, 2, 3)))
        nghost = int(rng.choice([1, 2, 4]))
        mf = MultiFab(BoxArray(_random_disjoint_grids(rng, domain)), 1, nghost)
        mf.fill(SENTINEL)
        mf.set_from_function(lambda i, j, k: i + 10.0 * j + 100.0 * k)
        fill_boundary(mf, geom, workers=int(rng.choice([1, 3])))
        _ghost_check_vectorized(mf, geom)
    print(f"criterion 3: PASS ({trials} randomized ghost-fill trials, "
          "zero failures)")


def test_criterion_4_heat_correctness():
    """32^3, 10 steps: amplification error <= 1e-13, conservation <= 1e-11
    relative per step."""
    n = 32
    domain = Box((0, 0, 0), (n - 1, n - 1, n - 1))
    geom = Geometry(domain, dx=(1.0 / n,) * 3)
    params = HeatParams.stable(1.0, geom.dx[0])
    mf = MultiFab(BoxArray([domain]), 1, 1)
    init_cosine(mf, geom, offset=1.0)
    u0 = mf.grid_valid_array(0).copy()
    work = mf.clone_empty()
    sched = build_schedule(mf, (16, 8, 8))
    cur, nxt = mf, work
    s_prev = cur.reduce_sum()
    max_drift = 0.0
    for _ in range(10):
        fill_boundary(cur, geom)
        heat_step(nxt, cur, geom, params, sched)
        cur, nxt = nxt, cur
        s = cur.reduce_sum()
        max_drift = max(max_drift, abs(s - s_prev) / abs(s_prev))
        s_prev = s
    g10 = heat_amplification(params, geom) ** 10
    expect = 1.0 + g10 * (u0 - 1.0)  # the offset mode is steady
    err = float(np.max(np.abs(cur.grid_valid_array(0) - expect))
                / np.max(np.abs(expect)))
    assert err <= 1e-13
    assert max_drift <= 1e-11
    print(f"criterion 4: PASS (amplification error {err:.2e} <= 1e-13, "
          f"max per-step sum drift {max_drift:.2e} <= 1e-11 relative)")


def _exact_coeffs():
    moments = [0, 2, 4, 6, 8]
    A = [
        [Fraction(1 if m == 0 else 0)] + [Fraction(2 * k**m) for k in range(1, 5)]
        for m in moments
    ]
    rhs = [Fraction(2 if m == 2 else 0) for m in moments]
    for col in range(5):
        piv = next(r for r in range(col, 5) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        for r in range(5):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
                rhs[r] = rhs[r] - f * rhs[col]
    return [float(rhs[r] / A[r][r]) for r in range(5)]


def _wide4_operator_error(n):
    domain = Box((0, 0, 0), (n - 1, n - 1, n - 1))
    geom = Geometry(domain, dx=(1.0 / n,) * 3)
    mf = MultiFab(BoxArray([domain]), 1, 4)
    init_cosine(mf, geom)
    out = mf.clone_empty()
    fill_boundary(mf, geom)
    wide4_step(out, mf, geom, 1.0, 1.0, build_schedule(mf))
    lap_h = out.grid_valid_array(0) - mf.grid_valid_array(0)
    lap_exact = -3.0 * (2.0 * math.pi) ** 2 * mf.grid_valid_array(0)
    return float(np.max(np.abs(lap_h - lap_exact)))


def test_criterion_5_wide_stencil_order():
    coeff_err = float(np.max(np.abs(
        derive_coeffs8().as_array() - np.array(_exact_coeffs())
    )))
    assert coeff_err <= 1e-12
    e16 = _wide4_operator_error(16)
    e32 = _wide4_operator_error(32)
    order = math.log2(e16 / e32)
    assert order >= 7.5
    print(f"criterion 5: PASS (coefficient error {coeff_err:.2e} <= 1e-12, "
          f"measured order {order:.2f} >= 7.5)")


def test_criterion_6_transparency():
    """Checksums bitwise identical across tiling x workers x layout, both
    kernels, 64^3, 20 steps."""
    tilings = [None, (128, 4, 4), (32, 8, 8)]
    worker_counts = sorted({1, 4, MAX_WORKERS})
    layouts = [(CONTIGUOUS, None), (REGIONAL, (64, 64, 64))]
    for kernel in ("heat", "wide4"):
        checksums = set()
        variants = 0
        for ts in tilings:
            for threads in worker_counts:
                for layout, region in layouts:
                    cfg = RunConfig(
                        nx=64, ny=64, nz=64, steps=20, kernel=kernel,
                        tile_size=ts, threads=threads, layout=layout,
                        region_size=region or (64, 64, 64),
                    )
                    checksums.add(run(cfg).checksum)
                    variants += 1
        assert len(checksums) == 1, f"{kernel}: {checksums}"
        print(f"criterion 6: {kernel} checksum bitwise identical across "
              f"{variants} variants ({checksums.pop():.17g})")
    print("criterion 6: PASS")


def test_criterion_7_serial_tiling_benefit():
    """128^3 heat, 1000 steps, 1 worker: tiled kernel time <= untiled / 1.2.

    The gate is asserted as specified; the measured ratio is printed either
    way so the report stays honest on hardware where the untiled sweep is
    already cache-resident.
    """
    times = {}
    for label, ts in (("untiled", None), ("tiled", (128, 4, 4))):
        cfg = RunConfig(nx=128, ny=128, nz=128, steps=1000, kernel="heat",
                        tile_size=ts, threads=1)
        times[label] = run(cfg).kernel_seconds
    ratio = times["untiled"] / times["tiled"]
    verdict = "PASS" if ratio >= 1.2 else "FAIL"
    print(f"criterion 7: {verdict} (untiled {times['untiled']:.2f} s, "
          f"tiled {times['tiled']:.2f} s, ratio {ratio:.3f}, gate 1.2)")
    assert ratio >= 1.2, (
        f"measured untiled/tiled kernel-time ratio {ratio:.3f} < 1.2; "
        "on this host the 128^3 working set fits in cache, so blocking "
        "cannot reduce memory traffic"
    )


@pytest.mark.skipif(
    MAX_WORKERS < 8,
    reason=f"criterion 8 requires >= 8 cores; this host has {MAX_WORKERS}",
)
def test_criterion_8_thread_scaling():
    base = dict(nx=128, ny=128, nz=128, steps=200, kernel="heat")
    t1 = run(RunConfig(**base, tile_size=(128, 4, 4), threads=1)).kernel_seconds
    t8 = run(RunConfig(**base, tile_size=(128, 4, 4), threads=8)).kernel_seconds
    loop8 = run(RunConfig(**base, tile_size=None, threading="loop",
                          threads=8)).kernel_seconds
    speedup = t1 / t8
    print(f"criterion 8: tiled 1w {t1:.2f} s, 8w {t8:.2f} s "
          f"(speedup {speedup:.2f}), loop 8w {loop8:.2f} s")
    assert speedup >= 4.0
    assert t8 <= loop8
    print("criterion 8: PASS")


def test_criterion_9_csv_contract(tmp_path):
    """CSV exposes fill and kernel seconds; byte-stable golden format."""
    cfg = RunConfig(nx=16, ny=16, nz=16, steps=2, tile_size=(8, 4, 4))
    report = run(cfg)
    path = tmp_path / "bench.csv"
    emit_csv([report], str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    cols = dict(zip(lines[0].split(","), lines[1].split(",")))
    fill = float(cols["fill_seconds"])
    kern = float(cols["kernel_seconds"])
    frac = fill / (fill + kern)
    assert 0.0 <= frac <= 1.0

    golden = RunReport(
        config=RunConfig(nx=64, ny=64, nz=64, tile_size=(128, 4, 4),
                         threads=12, steps=1000),
        kernel_seconds=1.2345678, fill_seconds=0.12345678,
        total_seconds=1.3580246, kernel_calls=1000, fill_calls=1000,
        checksum=42.5, arena_bytes=1024,
    )
    gpath = tmp_path / "golden.csv"
    emit_csv([golden], str(gpath))
    want = (CSV_HEADER + "\n"
            "heat,contiguous,tile,12,128,4,4,1000,"
            "1.23457,0.123457,1.35802,42.5,1024\n")
    assert gpath.read_bytes() == want.encode()
    print(f"criterion 9: PASS (fill fraction computable: {frac:.3f}; "
          "golden byte format exact)")
