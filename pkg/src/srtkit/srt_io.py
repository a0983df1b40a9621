"""Binary formats: ``.srt`` sparse radar tensors and ``.rt4`` dense dumps.

All fields are little-endian with no padding.

``.srt`` header, 80 bytes::

    magic               6s   b"4DSRT\\0"
    version             u16  1
    roi_min             3*f64  meters
    roi_max             3*f64  meters
    voxel               f64  meters
    density_percent     f64
    source_valid_count  u32
    element_count       u32

followed by ``element_count`` 10-byte records ``(ix u16, iy u16, iz u16,
power f32)`` sorted by ascending linear voxel index (x slowest).

``.rt4`` header, 104 bytes: magic ``b"4DRT\\0\\0"``, version u16, then for
each of the Doppler, range, azimuth, elevation axes ``(count u64, start
f64, step f64)``. Values follow as row-major float32.
"""

from __future__ import annotations

import contextlib
import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grid import AxisSpec, CartesianRoi, DenseTensor, GridError, PolarGrid4D, voxel_count
from .pool import PoolError, SparseRadarTensor, retained_count

SRT_MAGIC = b"4DSRT\0"
SRT_VERSION = 1
SRT_HEADER = struct.Struct("<6sH6dddII")
SRT_RECORD = np.dtype([("ix", "<u2"), ("iy", "<u2"), ("iz", "<u2"), ("power", "<f4")])

RT4_MAGIC = b"4DRT\0\0"
RT4_VERSION = 1
RT4_HEADER = struct.Struct("<6sH" + "Qdd" * 4)

MAX_AXIS = 0xFFFF
_CHUNK = 1 << 20

assert SRT_HEADER.size == 80 and SRT_RECORD.itemsize == 10 and RT4_HEADER.size == 104


class FormatError(ValueError):
    """Base class for malformed or unsupported files."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedError(FormatError):
    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(f"truncated {what}: expected {expected} bytes, got {actual}")
        self.expected = expected
        self.actual = actual


class HeaderError(FormatError):
    pass


class RecordOrderError(FormatError):
    pass


class RecordRangeError(FormatError):
    pass


class RecordValueError(FormatError):
    pass


class TrailingDataError(FormatError):
    pass


def srt_file_size(element_count: int) -> int:
    return SRT_HEADER.size + SRT_RECORD.itemsize * element_count


@contextlib.contextmanager
def atomic_write(path):
    """Write to a temp file in the target directory, then rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as f:
            yield f
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


@contextlib.contextmanager
def _sink(target):
    if isinstance(target, (str, os.PathLike)):
        with atomic_write(target) as f:
            yield f
    else:
        yield target


@contextlib.contextmanager
def _source(source):
    if isinstance(source, (bytes, bytearray, memoryview)):
        yield io.BytesIO(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as f:
            yield f
    else:
        yield source


def _remaining(stream) -> int | None:
    try:
        if not stream.seekable():
            return None
        pos = stream.tell()
        end = stream.seek(0, io.SEEK_END)
        stream.seek(pos)
        return end - pos
    except (AttributeError, OSError):
        return None


def _read_exact(stream, n: int, what: str) -> bytes:
    """Read exactly n bytes without trusting n for up-front allocation."""
    avail = _remaining(stream)
    if avail is not None and avail < n:
        raise TruncatedError(what, n, avail)
    if avail is not None:
        data = stream.read(n)
        if len(data) != n:
            raise TruncatedError(what, n, len(data))
        return data
    parts, got = [], 0
    while got < n:
        block = stream.read(min(_CHUNK, n - got))
        if not block:
            break
        parts.append(block)
        got += len(block)
    if got != n:
        raise TruncatedError(what, n, got)
    return b"".join(parts)


def _read_header(stream, struct_: struct.Struct, magic: bytes, version: int, what: str):
    head = stream.read(struct_.size)
    if head[: len(magic)] != magic[: len(head)] or len(head) == 0:
        raise BadMagicError(f"bad magic: expected {magic!r}, got {head[:len(magic)]!r}")
    if len(head) < struct_.size:
        raise TruncatedError(f"{what} header", struct_.size, len(head))
    fields = struct_.unpack(head)
    if fields[1] != version:
        raise UnsupportedVersionError(f"unsupported {what} version {fields[1]} (expected {version})")
    return fields


def _check_trailing(stream) -> None:
    if stream.read(1):
        raise TrailingDataError("unexpected bytes after the last record")


# --- .srt -------------------------------------------------------------------


def _validate_sparse(t: SparseRadarTensor) -> tuple[int, int, int]:
    counts = voxel_count(t.roi)
    if max(counts) > MAX_AXIS:
        raise ValueError(f"voxel counts {counts} exceed {MAX_AXIS} per axis")
    if t.source_valid_count > 0xFFFFFFFF:
        raise ValueError("source_valid_count does not fit in 32 bits")
    if t.source_valid_count > counts[0] * counts[1] * counts[2]:
        raise ValueError("source_valid_count exceeds the RoI voxel count")
    if len(t) != retained_count(t.density_percent, t.source_valid_count):
        raise ValueError(
            f"element count {len(t)} does not match density {t.density_percent}% "
            f"of {t.source_valid_count} valid voxels"
        )
    if len(t):
        if np.any(t.indices >= np.asarray(counts)):
            raise ValueError("voxel index out of range")
        lin = t.linear_indices
        if np.any(np.diff(lin) <= 0):
            raise ValueError("elements must be sorted by strictly ascending linear index")
    return counts


def encode_srt(t: SparseRadarTensor) -> bytes:
    _validate_sparse(t)
    header = SRT_HEADER.pack(
        SRT_MAGIC, SRT_VERSION, *t.roi.min, *t.roi.max, t.roi.voxel,
        t.density_percent, t.source_valid_count, len(t),
    )
    rec = np.empty(len(t), dtype=SRT_RECORD)
    rec["ix"], rec["iy"], rec["iz"] = t.indices.T
    rec["power"] = t.powers
    return header + rec.tobytes()


def write_srt(t: SparseRadarTensor, sink) -> int:
    """Serialize to a path (written atomically) or a binary stream.

    Returns the byte count, always ``80 + 10 * len(t)``.
    """
    data = encode_srt(t)
    with _sink(sink) as f:
        f.write(data)
    return len(data)


def _parse_srt_header(fields):
    _, _, x0, y0, z0, x1, y1, z1, voxel, density, valid_count, count = fields
    try:
        roi = CartesianRoi((x0, y0, z0), (x1, y1, z1), voxel)
        counts = voxel_count(roi)
    except GridError as exc:
        raise HeaderError(f"invalid RoI in header: {exc}") from None
    if max(counts) > MAX_AXIS:
        raise HeaderError(f"voxel counts {counts} exceed {MAX_AXIS} per axis")
    if valid_count > counts[0] * counts[1] * counts[2]:
        raise HeaderError("source_valid_count exceeds the RoI voxel count")
    try:
        expected = retained_count(density, valid_count)
    except PoolError as exc:
        raise HeaderError(f"invalid density in header: {exc}") from None
    if count != expected:
        raise HeaderError(
            f"element_count {count} inconsistent with density {density}% of {valid_count}"
        )
    return roi, counts, density, valid_count, count


def read_srt_header(source) -> dict:
    with _source(source) as f:
        fields = _read_header(f, SRT_HEADER, SRT_MAGIC, SRT_VERSION, "srt")
    roi, counts, density, valid_count, count = _parse_srt_header(fields)
    return {
        "format": "srt",
        "version": fields[1],
        "roi_min": list(roi.min),
        "roi_max": list(roi.max),
        "voxel": roi.voxel,
        "voxel_counts": list(counts),
        "roi_voxel_count": counts[0] * counts[1] * counts[2],
        "density_percent": density,
        "source_valid_count": valid_count,
        "element_count": count,
    }


def read_srt(source) -> SparseRadarTensor:
    """Parse a ``.srt`` file from a path, bytes, or binary stream."""
    with _source(source) as f:
        fields = _read_header(f, SRT_HEADER, SRT_MAGIC, SRT_VERSION, "srt")
        roi, counts, density, valid_count, count = _parse_srt_header(fields)
        body = _read_exact(f, count * SRT_RECORD.itemsize, "srt records")
        _check_trailing(f)
    rec = np.frombuffer(body, dtype=SRT_RECORD)
    idx = np.stack([rec["ix"], rec["iy"], rec["iz"]], axis=1)
    if count:
        over = idx >= np.asarray(counts)
        if over.any():
            bad = int(np.flatnonzero(over.any(axis=1))[0])
            raise RecordRangeError(f"record {bad} index {tuple(idx[bad])} outside {counts}")
        lin = np.ravel_multi_index(idx.T.astype(np.intp), counts)
        steps = np.diff(lin)
        if np.any(steps <= 0):
            bad = int(np.flatnonzero(steps <= 0)[0]) + 1
            raise RecordOrderError(f"record {bad} is not in strictly ascending voxel order")
        power = rec["power"]
        if not np.all(np.isfinite(power)) or np.any(power < 0):
            raise RecordValueError("record powers must be finite and nonnegative")
    return SparseRadarTensor(roi, density, idx, rec["power"].astype(np.float32), valid_count)


# --- .rt4 -------------------------------------------------------------------


def write_raw_dense(t: DenseTensor, grid: PolarGrid4D, sink) -> int:
    """Dump a 4D tensor as float32; returns the byte count."""
    if t.shape != grid.shape:
        raise GridError(f"tensor shape {t.shape} does not match grid {grid.shape}")
    axes = []
    for a in grid.axes:
        axes += [a.count, a.start, a.step]
    header = RT4_HEADER.pack(RT4_MAGIC, RT4_VERSION, *axes)
    body = np.ascontiguousarray(t.values, dtype="<f4")
    with _sink(sink) as f:
        f.write(header)
        f.write(memoryview(body).cast("B"))
    return len(header) + body.nbytes


def _parse_rt4_header(fields) -> PolarGrid4D:
    raw = fields[2:]
    try:
        axes = [AxisSpec(int(raw[i]), raw[i + 1], raw[i + 2]) for i in range(0, 12, 3)]
        return PolarGrid4D(*axes)
    except GridError as exc:
        raise HeaderError(f"invalid grid in header: {exc}") from None


def read_rt4_header(source) -> dict:
    with _source(source) as f:
        fields = _read_header(f, RT4_HEADER, RT4_MAGIC, RT4_VERSION, "rt4")
    grid = _parse_rt4_header(fields)
    return {
        "format": "rt4",
        "version": fields[1],
        "axes": {
            name: {"count": a.count, "start": a.start, "step": a.step}
            for name, a in zip(("doppler", "range", "azimuth", "elevation"), grid.axes)
        },
        "shape": list(grid.shape),
    }


def read_raw_dense(source) -> tuple[DenseTensor, PolarGrid4D]:
    with _source(source) as f:
        fields = _read_header(f, RT4_HEADER, RT4_MAGIC, RT4_VERSION, "rt4")
        grid = _parse_rt4_header(fields)
        n = int(np.prod(grid.shape, dtype=object))
        body = _read_exact(f, 4 * n, "rt4 values")
        _check_trailing(f)
    values = np.frombuffer(body, dtype="<f4").astype(np.float32, copy=False).reshape(grid.shape)
    if not np.all(np.isfinite(values)) or (values.size and values.min() < 0):
        raise RecordValueError("dense values must be finite and nonnegative")
    return DenseTensor(values, check=False), grid


def sniff(path) -> str:
    """Return "srt" or "rt4" from the file's magic."""
    with open(path, "rb") as f:
        head = f.read(6)
    if head == SRT_MAGIC:
        return "srt"
    if head == RT4_MAGIC:
        return "rt4"
    raise BadMagicError(f"{path}: not a .srt or .rt4 file (magic {head!r})")
