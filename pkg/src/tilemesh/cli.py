"""Command line interface.

    tilemesh run   [flags]   one timed run, optional CSV row
    tilemesh sweep [flags]   tile-size or thread sweep into a CSV
    tilemesh plot  --csv F   render figures from a sweep CSV

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    CSV_HEADER,
    RunConfig,
    VerificationError,
    emit_csv,
    load_config_file,
    run,
    sweep,
)


# Sentinel for "flag not given"; must not be a string, because argparse runs
# the type converter on string defaults.
_UNSET = object()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _parse_tile_size(text: str):
    if text.lower() == "off":
        return None
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected X,Y,Z or 'off', got {text!r}")
    vals = tuple(int(p) for p in parts)
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"tile extents must be >= 1, got {text!r}")
    return vals


def _parse_triple(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected X,Y,Z, got {text!r}")
    return tuple(int(p) for p in parts)


def _parse_periodic(text: str):
    t = text.lower()
    if t in ("none", ""):
        return (False, False, False)
    if set(t) <= set("xyz"):
        return ("x" in t, "y" in t, "z" in t)
    if set(t) <= set("01") and len(t) == 3:
        return tuple(ch == "1" for ch in t)
    raise argparse.ArgumentTypeError(f"bad periodicity mask {text!r}")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--ny", type=int, default=None, help="defaults to --nx")
    p.add_argument("--nz", type=int, default=None, help="defaults to --nx")
    p.add_argument("--max-grid-size", type=int, default=None)
    p.add_argument("--tile-size", type=_parse_tile_size, default=_UNSET,
                   help="X,Y,Z or 'off' (default: framework default tile size)")
    p.add_argument("--layout", choices=["contiguous", "regional"], default="contiguous")
    p.add_argument("--region-size", type=_parse_triple, default=(64, 64, 64))
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--kernel", choices=["heat", "wide4"], default="heat")
    p.add_argument("--threading", choices=["tile", "loop"], default="tile")
    p.add_argument("--periodic", type=_parse_periodic, default=(True, True, True),
                   help="subset of 'xyz', a 0/1 mask, or 'none'")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--csv", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="JSON config file (flags override)")


def _config_from_args(args) -> RunConfig:
    from .iterator import DEFAULT_TILE_SIZE

    tile_size = args.tile_size
    threads = args.threads
    if args.config:
        try:
            cfg = load_config_file(args.config)
        except OSError as exc:
            raise SystemExit(f"cannot read config file: {exc}") from exc
        if tile_size is _UNSET and "tile_size" in cfg:
            v = cfg["tile_size"]
            tile_size = None if v == "off" else tuple(v)
        if threads is None and "workers" in cfg:
            threads = int(cfg["workers"])
    if tile_size is _UNSET:
        tile_size = None if args.threading == "loop" else DEFAULT_TILE_SIZE
    if threads is None:
        threads = 1
    try:
        return RunConfig(
            nx=args.nx,
            ny=args.ny if args.ny is not None else args.nx,
            nz=args.nz if args.nz is not None else args.nx,
            max_grid_size=args.max_grid_size,
            tile_size=tile_size,
            layout=args.layout,
            region_size=args.region_size,
            threads=threads,
            steps=args.steps,
            kernel=args.kernel,
            threading=args.threading,
            periodic=args.periodic,
            verify=args.verify,
            csv=args.csv,
            seed=args.seed,
        )
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        raise SystemExit(1) from exc


def parse_args(argv) -> RunConfig:
    """Parse run-style flags into a RunConfig (the `run` subcommand)."""
    p = _Parser(prog="tilemesh run")
    _add_run_flags(p)
    return _config_from_args(p.parse_args(argv))


def _print_report(r) -> None:
    c = r.config
    ts = "off" if c.tile_size is None else "x".join(map(str, c.tile_size))
    print(
        f"kernel={c.kernel} threading={c.threading} layout={c.layout} "
        f"threads={c.threads} tile={ts} steps={c.steps}"
    )
    print(
        f"  kernel {r.kernel_seconds:.4f} s   fill {r.fill_seconds:.4f} s   "
        f"total {r.total_seconds:.4f} s"
    )
    print(f"  checksum {r.checksum:.17g}   arena {r.arena_bytes} B")
    if r.speedup is not None:
        print(f"  speedup vs first variant: {r.speedup:.2f}x")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    top = _Parser(prog="tilemesh")
    sub = top.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="one timed run")
    _add_run_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="tile-size or thread sweep")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--tile-sizes", default=None,
                         help="semicolon-separated list, e.g. '128,4,4;128,8,8;off'")
    p_sweep.add_argument("--threads-list", default=None,
                         help="comma-separated thread counts, e.g. '1,2,4,8'")

    p_plot = sub.add_parser("plot", help="render figures from a CSV")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--outdir", default=None)

    try:
        args = top.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1

    if args.command is None:
        top.print_usage(sys.stderr)
        return 1

    try:
        if args.command == "run":
            config = _config_from_args(args)
            report = run(config)
            _print_report(report)
            if config.csv:
                emit_csv([report], config.csv)
        elif args.command == "sweep":
            config = _config_from_args(args)
            if args.tile_sizes:
                tiles = [_parse_tile_size(t) for t in args.tile_sizes.split(";") if t]
                reports = sweep(config, tile_sizes=tiles)
            elif args.threads_list:
                counts = [int(t) for t in args.threads_list.split(",") if t]
                reports = sweep(config, thread_counts=counts)
            else:
                sys.stderr.write("error: sweep needs --tile-sizes or --threads-list\n")
                return 1
            for r in reports:
                _print_report(r)
            if config.csv:
                emit_csv(reports, config.csv)
            else:
                print(CSV_HEADER)
        elif args.command == "plot":
            from .plots import render_report

            for path in render_report(args.csv, args.outdir):
                print(path)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except VerificationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
