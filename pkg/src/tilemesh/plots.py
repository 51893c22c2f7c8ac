"""Render report figures from a benchmark CSV.

Reads the delimited output of `emit_csv` and writes PNG figures next to it:
a tile-size sweep of kernel time, a thread-scaling speedup curve, and the
ghost-fill time fraction fill/(fill+kernel).
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_rows(csv_path: str) -> list[dict]:
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"no data rows in {csv_path}")
    return rows


def _tile_label(row: dict) -> str:
    ts = (row["tile_x"], row["tile_y"], row["tile_z"])
    return "untiled" if ts == ("0", "0", "0") else "x".join(ts)


def plot_tile_sweep(rows: list[dict], out_path: str) -> None:
    labels = [_tile_label(r) for r in rows]
    times = [float(r["kernel_seconds"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(rows)), times, color="steelblue")
    ax.set_xticks(range(len(rows)), labels, rotation=30, ha="right")
    ax.set_ylabel("kernel time [s]")
    ax.set_title(f"Tile size sweep ({rows[0]['kernel']}, {rows[0]['threads']} thread(s))")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def plot_thread_scaling(rows: list[dict], out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    by_mode: dict[str, list[dict]] = {}
    for r in rows:
        by_mode.setdefault(f"{r['kernel']}/{r['threading']}", []).append(r)
    for mode, rs in by_mode.items():
        rs = sorted(rs, key=lambda r: int(r["threads"]))
        base = float(rs[0]["kernel_seconds"])
        threads = [int(r["threads"]) for r in rs]
        speedup = [base / float(r["kernel_seconds"]) for r in rs]
        ax.plot(threads, speedup, marker="o", label=mode)
    ax.plot(threads, threads, ls="--", color="gray", label="ideal")
    ax.set_xlabel("threads")
    ax.set_ylabel("kernel speedup vs first row")
    ax.legend()
    ax.set_title("Thread scaling")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def plot_fill_fraction(rows: list[dict], out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    rs = sorted(rows, key=lambda r: int(r["threads"]))
    threads = [int(r["threads"]) for r in rs]
    frac = [
        float(r["fill_seconds"]) / (float(r["fill_seconds"]) + float(r["kernel_seconds"]))
        for r in rs
    ]
    ax.plot(threads, frac, marker="s", color="firebrick")
    ax.set_xlabel("threads")
    ax.set_ylabel("fill / (fill + kernel)")
    ax.set_ylim(0, 1)
    ax.set_title("Ghost fill time fraction")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_report(csv_path: str, out_dir: str | None = None) -> list[str]:
    """Write every figure the CSV's axes support; returns the file paths."""
    rows = _read_rows(csv_path)
    if out_dir is None:
        out_dir = os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(csv_path))[0]
    written = []

    tiles = {_tile_label(r) for r in rows}
    threads = {r["threads"] for r in rows}
    if len(tiles) > 1:
        p = os.path.join(out_dir, f"{stem}_tile_sweep.png")
        plot_tile_sweep(rows, p)
        written.append(p)
    if len(threads) > 1:
        p = os.path.join(out_dir, f"{stem}_thread_scaling.png")
        plot_thread_scaling(rows, p)
        written.append(p)
        p = os.path.join(out_dir, f"{stem}_fill_fraction.png")
        plot_fill_fraction(rows, p)
        written.append(p)
    if not written:
        p = os.path.join(out_dir, f"{stem}_fill_fraction.png")
        plot_fill_fraction(rows, p)
        written.append(p)
    return written
