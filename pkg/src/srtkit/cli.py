"""Command-line entry point: synth, convert, sweep, bench, inspect."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    REFERENCE_DENSITIES,
    emit_plot_data,
    run_sweep,
    run_throughput,
)
from .grid import DEFAULT_ROI, CartesianRoi, GridError, voxel_count
from .pipeline import DEFAULT_DENSITY, convert_file
from .pool import PoolError, check_density
from .resample import METHODS
from .srt_io import read_raw_dense, read_rt4_header, read_srt, read_srt_header, sniff, write_raw_dense
from .synth import load_scene, synthesize_frame, with_seed

log = logging.getLogger("srtkit")


def _triple(text: str) -> tuple[float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z numbers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
    return vals


def _density(text: str) -> float:
    try:
        return check_density(float(text))
    except (ValueError, PoolError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _density_list(text: str) -> list[float]:
    vals = [_density(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("density list is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("densities must be strictly increasing")
    return vals


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_roi(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("region of interest")
    g.add_argument("--roi-min", type=_triple, default=DEFAULT_ROI.min, metavar="X,Y,Z")
    g.add_argument("--roi-max", type=_triple, default=DEFAULT_ROI.max, metavar="X,Y,Z")
    g.add_argument("--voxel", type=float, default=DEFAULT_ROI.voxel, metavar="M")
    p.add_argument("--interp", choices=METHODS, default="trilinear")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srtkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a dense .rt4 frame from a scene file")
    p.add_argument("--scene", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=_u64, help="overrides the scene file seed")
    p.add_argument("--frame-index", type=int, default=0)

    p = sub.add_parser("convert", help="convert .rt4 frames to .srt at one density")
    p.add_argument("inputs", nargs="+", type=Path)
    out = p.add_mutually_exclusive_group()
    out.add_argument("--out", type=Path, help="output file (single input only)")
    out.add_argument("--out-dir", type=Path, help="directory for <stem>.srt outputs")
    p.add_argument("--density", type=_density, default=DEFAULT_DENSITY)
    p.add_argument("--threads", type=_positive_int, default=1)
    _add_roi(p)

    p = sub.add_parser("sweep", help="convert frames over a density list; write sweep.csv")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--densities", type=_density_list, default=list(REFERENCE_DENSITIES),
                   metavar="N1,N2,...")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--no-plot", action="store_true")
    _add_roi(p)

    p = sub.add_parser("bench", help="offline .srt vs online .rt4 loading throughput")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--density", type=_density, default=DEFAULT_DENSITY)
    p.add_argument("--repetitions", type=_positive_int, default=5)
    p.add_argument("--srt-dir", type=Path, help="where <stem>.srt files live (default: beside input)")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="frame-level workers; >1 reports aggregate throughput")
    p.add_argument("--no-plot", action="store_true")
    _add_roi(p)

    p = sub.add_parser("inspect", help="print header fields and power statistics")
    p.add_argument("file", type=Path)
    p.add_argument("--json", action="store_true")
    return parser


def _roi(parser, args) -> CartesianRoi:
    try:
        roi = CartesianRoi(args.roi_min, args.roi_max, args.voxel)
        voxel_count(roi)
        return roi
    except GridError as exc:
        parser.error(f"invalid region of interest: {exc}")


def cmd_synth(args) -> int:
    sf = load_scene(args.scene)
    if args.seed is not None:
        sf = with_seed(sf, args.seed)
    grid = sf.grid()
    tensor = synthesize_frame(sf.scene, sf.chirp, sf.array, grid, args.frame_index)
    n = write_raw_dense(tensor, grid, args.out)
    log.info("wrote %s (%d bytes, shape %s)", args.out, n, grid.shape)
    return 0


def cmd_convert(args, roi) -> int:
    if args.out is not None:
        targets = [args.out]
    else:
        base = args.out_dir
        if base is not None:
            base.mkdir(parents=True, exist_ok=True)
        targets = [(base or src.parent) / (src.stem + ".srt") for src in args.inputs]

    def one(pair):
        src, dst = pair
        sparse = convert_file(src, dst, roi, args.density, args.interp)
        log.info("%s -> %s (%d elements)", src, dst, len(sparse))

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        list(pool.map(one, zip(args.inputs, targets)))
    return 0


def cmd_sweep(args, roi) -> int:
    report = run_sweep(args.inputs, args.densities, roi, args.out_dir, args.interp, args.threads)
    emit_plot_data(report, args.out_dir / "sweep.csv")
    if report.rows and not args.no_plot:
        from .plotting import plot_sweep

        plot_sweep(report, args.out_dir / "sweep.png")
    if report.failures:
        # per-file causes were already logged by run_sweep
        print(f"srtkit: error: {len(report.failures)} of {len(args.inputs)} frames failed",
              file=sys.stderr)
        return 1
    return 0


def cmd_bench(args, roi) -> int:
    reports = run_throughput(args.inputs, args.density, roi, args.repetitions,
                             args.srt_dir, args.interp, args.threads)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    emit_plot_data(reports, args.out_dir / "throughput.csv")
    meta = [dataclasses.asdict(r) for r in reports]
    (args.out_dir / "throughput.json").write_text(json.dumps(meta, indent=2) + "\n")
    if not args.no_plot:
        from .plotting import plot_throughput

        plot_throughput(reports, args.out_dir / "throughput.png")
    on, off = reports
    print(f"online  {on.frames_per_second:.4g} frames/s")
    print(f"offline {off.frames_per_second:.4g} frames/s")
    print(f"speedup {off.speedup_ratio:.3g}x (published reference {off.reference_speedup_ratio:.3g}x)")
    return 0


def _stats(values: np.ndarray) -> dict:
    if values.size == 0:
        return {"min_power": None, "max_power": None, "mean_power": None}
    return {
        "min_power": float(values.min()),
        "max_power": float(values.max()),
        "mean_power": float(values.mean(dtype=np.float64)),
    }


def cmd_inspect(args) -> int:
    kind = sniff(args.file)
    if kind == "srt":
        info = read_srt_header(args.file)
        info.update(_stats(read_srt(args.file).powers))
    else:
        info = read_rt4_header(args.file)
        tensor, _ = read_raw_dense(args.file)
        info["element_count"] = int(tensor.values.size)
        info.update(_stats(tensor.values))
    info["file_bytes"] = args.file.stat().st_size
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        for key, val in info.items():
            if key == "axes":
                for name, ax in val.items():
                    print(f"{name}: count={ax['count']} start={ax['start']!r} step={ax['step']!r}")
            else:
                print(f"{key}: {val}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="srtkit: %(message)s", stream=sys.stderr,
    )
    if args.command == "convert" and args.out is not None and len(args.inputs) > 1:
        parser.error("--out takes a single input; use --out-dir for several")
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        roi = _roi(parser, args)
        return {"convert": cmd_convert, "sweep": cmd_sweep, "bench": cmd_bench}[args.command](
            args, roi
        )
    except (OSError, ValueError, RuntimeError) as exc:
        msg = " ".join(str(exc).split())
        print(f"srtkit: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
