"""Footprint-vs-density sweeps and offline-vs-online loading throughput."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import logging
import platform
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .grid import DEFAULT_ROI, CartesianRoi, GridError
from .pipeline import to_field
from .pool import check_density, top_percent_pool
from .srt_io import FormatError, atomic_write, read_raw_dense, read_srt, write_srt

log = logging.getLogger(__name__)

REFERENCE_DENSITIES = (0.01, 0.1, 1.0, 3.0, 5.0, 10.0, 15.0, 20.0, 30.0, 50.0)
# published training iterations/s with sparse vs dense inputs, kept as reference metadata
REFERENCE_OFFLINE_RATE = 8.04
REFERENCE_ONLINE_RATE = 0.47
REFERENCE_SPEEDUP = REFERENCE_OFFLINE_RATE / REFERENCE_ONLINE_RATE

SWEEP_COLUMNS = ("density_percent", "element_count", "file_bytes", "convert_seconds")
THROUGHPUT_COLUMNS = ("mode", "frames_per_second", "speedup_ratio")


class BenchError(RuntimeError):
    pass


def _environment() -> dict:
    return {
        "machine": platform.node() or "unknown",
        "platform": platform.platform(),
        "python": platform.python_version(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


@dataclass(frozen=True)
class SweepRow:
    density_percent: float
    element_count: float
    file_bytes: float
    convert_seconds: float


@dataclass
class SweepReport:
    rows: list[SweepRow] = field(default_factory=list)
    environment: dict = field(default_factory=_environment)
    failures: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class ThroughputReport:
    mode: str
    frames_processed: int
    wall_seconds: float
    frames_per_second: float
    speedup_ratio: float
    bytes_per_frame: float
    workers: int = 1
    reference_speedup_ratio: float = REFERENCE_SPEEDUP


def _check_densities(densities: Sequence[float]) -> list[float]:
    if not densities:
        raise ValueError("density list is empty")
    out = [check_density(d) for d in densities]
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError("densities must be strictly increasing")
    return out


def density_tag(density: float) -> str:
    return f"{density:g}".replace(".", "p")


def _sweep_frame(path: Path, densities, roi, out_dir: Path, method):
    t0 = time.perf_counter()
    tensor, grid = read_raw_dense(path)
    fld = to_field(tensor, grid, roi, method)
    shared = time.perf_counter() - t0
    rows = []
    for d in densities:
        t1 = time.perf_counter()
        sparse = top_percent_pool(fld, d)
        nbytes = write_srt(sparse, out_dir / f"{path.stem}_d{density_tag(d)}.srt")
        rows.append((len(sparse), nbytes, shared + time.perf_counter() - t1))
    return rows


def run_sweep(frames: Sequence, densities: Sequence[float] = REFERENCE_DENSITIES,
              roi: CartesianRoi | None = None, out_dir=".", method: str = "trilinear",
              threads: int = 1) -> SweepReport:
    """Convert every frame at every density and report per-density means.

    ``convert_seconds`` is the full cost of producing one file: the shared
    read + Doppler reduction + resampling time plus that density's pooling
    and write. Frames that fail are logged and listed in ``failures``.
    """
    roi = roi or DEFAULT_ROI
    densities = _check_densities(densities)
    if not frames:
        raise ValueError("no input frames")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = SweepReport()

    def work(p):
        try:
            return _sweep_frame(Path(p), densities, roi, out_dir, method)
        except (OSError, FormatError, GridError, ValueError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, frames))

    good = []
    for p, res in zip(frames, results):
        if isinstance(res, Exception):
            log.error("%s: %s", p, res)
            report.failures.append((str(p), str(res)))
        else:
            good.append(res)
    if not good:
        return report
    for i, d in enumerate(densities):
        cols = list(zip(*(g[i] for g in good)))
        report.rows.append(SweepRow(
            d, statistics.fmean(cols[0]), statistics.fmean(cols[1]), statistics.fmean(cols[2])
        ))
    return report


def _srt_path(frame: Path, srt_dir: Path | None) -> Path:
    return (srt_dir or frame.parent) / (frame.stem + ".srt")


def _timed_passes(fn, frames, repetitions, workers):
    def one_pass():
        t0 = time.perf_counter()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(fn, frames))
        else:
            for f in frames:
                fn(f)
        return time.perf_counter() - t0

    one_pass()  # warm-up: file cache, resampling plan, JIT
    return statistics.median(one_pass() for _ in range(repetitions))


def run_throughput(frames: Sequence, density: float = 5.0, roi: CartesianRoi | None = None,
                   repetitions: int = 5, srt_dir=None, method: str = "trilinear",
                   workers: int = 1) -> tuple[ThroughputReport, ThroughputReport]:
    """Time online (dense read + transform + pool) against offline (.srt read).

    Each mode runs one warm-up pass over all frames, then ``repetitions``
    passes; the median pass time is reported. Modes never interleave.
    """
    roi = roi or DEFAULT_ROI
    check_density(density)
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if not frames:
        raise ValueError("no input frames")
    frames = [Path(f) for f in frames]
    srt_dir = Path(srt_dir) if srt_dir is not None else None
    srts = {f: _srt_path(f, srt_dir) for f in frames}
    missing = [str(p) for p in srts.values() if not p.exists()]
    if missing:
        raise BenchError(
            f"missing pre-converted file(s) {', '.join(missing)}; run `srtkit convert` first"
        )

    def online(f):
        tensor, grid = read_raw_dense(f)
        return top_percent_pool(to_field(tensor, grid, roi, method), density)

    def offline(f):
        sparse = read_srt(srts[f])
        return sparse.centers(), sparse.powers

    on_s = _timed_passes(online, frames, repetitions, workers)
    off_s = _timed_passes(offline, frames, repetitions, workers)
    n = len(frames)
    on_fps, off_fps = n / on_s, n / off_s
    ratio = off_fps / on_fps
    dense_bytes = statistics.fmean(f.stat().st_size for f in frames)
    srt_bytes = statistics.fmean(srts[f].stat().st_size for f in frames)
    return (
        ThroughputReport("online", n, on_s, on_fps, ratio, dense_bytes, workers),
        ThroughputReport("offline", n, off_s, off_fps, ratio, srt_bytes, workers),
    )


def _fmt(v) -> str:
    if isinstance(v, float) and v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


def emit_plot_data(report, path) -> Path:
    """Write a SweepReport or a sequence of ThroughputReports as CSV.

    Floats use their shortest round-trip representation.
    """
    path = Path(path)
    if isinstance(report, SweepReport):
        header = SWEEP_COLUMNS
        rows = [[_fmt(getattr(r, c)) for c in header] for r in report.rows]
    else:
        header = THROUGHPUT_COLUMNS
        rows = [[_fmt(getattr(r, c)) for c in header] for r in report]
    with atomic_write(path) as f:
        f.write(_csv_text(header, rows).encode())
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def read_sweep_csv(path) -> list[SweepRow]:
    with open(path, newline="") as f:
        return [
            SweepRow(*(float(row[c]) for c in SWEEP_COLUMNS)) for row in csv.DictReader(f)
        ]
