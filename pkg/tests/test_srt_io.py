import io
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srtkit.grid import DEFAULT_ROI, AxisSpec, CartesianRoi, DenseTensor, PolarGrid4D
from srtkit.pool import SparseRadarTensor, retained_count
from srtkit.srt_io import (
    RT4_HEADER,
    SRT_HEADER,
    BadMagicError,
    FormatError,
    HeaderError,
    RecordOrderError,
    RecordRangeError,
    RecordValueError,
    TrailingDataError,
    TruncatedError,
    UnsupportedVersionError,
    encode_srt,
    read_raw_dense,
    read_rt4_header,
    read_srt,
    read_srt_header,
    sniff,
    srt_file_size,
    write_raw_dense,
    write_srt,
)


def random_sparse(rng, roi=DEFAULT_ROI, density=None):
    shape = tuple(int(round((h - l) / roi.voxel)) for l, h in zip(roi.min, roi.max))
    total = int(np.prod(shape))
    valid = int(rng.integers(1, min(total, 5000) + 1))
    density = density or float(rng.choice([0.01, 0.1, 1, 3, 5, 10, 15, 20, 30, 50, 100]))
    k = retained_count(density, valid)
    lin = np.sort(rng.choice(total, size=k, replace=False))
    idx = np.stack(np.unravel_index(lin, shape), axis=1)
    bits = rng.integers(0, 0x7F800000, size=k, dtype=np.uint32)  # finite, nonnegative
    return SparseRadarTensor(roi, density, idx, bits.view(np.float32), valid)


def small_grid():
    return PolarGrid4D(AxisSpec(2, -1, 1), AxisSpec(2, 0, 1), AxisSpec(2, -0.1, 0.1),
                       AxisSpec(2, -0.1, 0.1))


class TestSrt:
    def test_header_is_80_bytes(self):
        assert SRT_HEADER.size == 80 and srt_file_size(0) == 80

    def test_one_element_is_90_bytes(self, tmp_path):
        t = SparseRadarTensor(DEFAULT_ROI, 100, [[1, 2, 3]], [4.5], 1)
        assert write_srt(t, tmp_path / "a.srt") == 90
        assert (tmp_path / "a.srt").stat().st_size == 90
        assert read_srt(tmp_path / "a.srt") == t
        assert sniff(tmp_path / "a.srt") == "srt"

    def test_layout(self):
        t = SparseRadarTensor(DEFAULT_ROI, 100, [[1, 2, 3]], [4.5], 1)
        b = encode_srt(t)
        assert b[:6] == b"4DSRT\0" and struct.unpack_from("<H", b, 6) == (1,)
        assert struct.unpack_from("<3H", b, 80) == (1, 2, 3)
        assert struct.unpack_from("<f", b, 86) == (4.5,)

    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            t = random_sparse(rng)
            b = encode_srt(t)
            u = read_srt(b)
            assert u == t
            assert encode_srt(u) == b
            assert len(b) == 80 + 10 * len(t)

    def test_stream_and_header(self):
        t = random_sparse(np.random.default_rng(2), density=5)
        buf = io.BytesIO()
        write_srt(t, buf)
        buf.seek(0)
        assert read_srt(buf) == t
        h = read_srt_header(encode_srt(t))
        assert h["element_count"] == len(t) and h["voxel_counts"] == [180, 80, 24]

    def test_bad_magic(self):
        b = bytearray(encode_srt(random_sparse(np.random.default_rng(3))))
        b[0] ^= 0xFF
        with pytest.raises(BadMagicError):
            read_srt(bytes(b))

    def test_version(self):
        b = bytearray(encode_srt(random_sparse(np.random.default_rng(3))))
        b[6] = 9
        with pytest.raises(UnsupportedVersionError):
            read_srt(bytes(b))

    def test_truncated_mid_record(self):
        b = encode_srt(random_sparse(np.random.default_rng(4), density=50))
        with pytest.raises(TruncatedError) as e:
            read_srt(b[:-3])
        assert e.value.expected == len(b) - 80 and e.value.actual == len(b) - 83
        assert "expected" in str(e.value)

    def test_truncated_header(self):
        with pytest.raises(TruncatedError):
            read_srt(b"4DSRT\0\x01\x00abc")

    def test_trailing(self):
        b = encode_srt(random_sparse(np.random.default_rng(5)))
        with pytest.raises(TrailingDataError):
            read_srt(b + b"\0")

    def _two(self):
        return SparseRadarTensor(DEFAULT_ROI, 100, [[0, 0, 1], [0, 0, 2]], [1.0, 2.0], 2)

    def test_unsorted(self):
        b = bytearray(encode_srt(self._two()))
        b[80:90], b[90:100] = b[90:100], b[80:90]
        with pytest.raises(RecordOrderError):
            read_srt(bytes(b))

    def test_out_of_range(self):
        b = bytearray(encode_srt(self._two()))
        struct.pack_into("<H", b, 90 + 4, 24)
        with pytest.raises(RecordRangeError):
            read_srt(bytes(b))

    def test_negative_power(self):
        b = bytearray(encode_srt(self._two()))
        struct.pack_into("<f", b, 96, -1.0)
        with pytest.raises(RecordValueError):
            read_srt(bytes(b))

    def test_inconsistent_count(self):
        b = bytearray(encode_srt(self._two()))
        struct.pack_into("<I", b, 72, 3)
        with pytest.raises(HeaderError):
            read_srt(bytes(b))

    def test_axis_overflow_on_write(self):
        roi = CartesianRoi((0, 0, 0), (70000, 1, 1), 1.0)
        t = SparseRadarTensor(roi, 100, [[0, 0, 0]], [1.0], 1)
        with pytest.raises(ValueError):
            encode_srt(t)

    def test_write_failure_leaves_no_file(self, tmp_path):
        bad = SparseRadarTensor(DEFAULT_ROI, 5, [[0, 0, 0]], [1.0], 1000)
        with pytest.raises(ValueError):
            write_srt(bad, tmp_path / "x.srt")
        assert list(tmp_path.iterdir()) == []

    @given(st.binary(max_size=200))
    def test_fuzz_random(self, data):
        try:
            read_srt(data)
        except FormatError:
            pass

    @given(st.integers(0, 2**32 - 1), st.lists(st.tuples(st.integers(0, 199), st.integers(0, 255)),
                                              max_size=6), st.integers(0, 200))
    def test_fuzz_mutations(self, seed, edits, cut):
        b = bytearray(encode_srt(random_sparse(np.random.default_rng(seed))))
        for pos, val in edits:
            if pos < len(b):
                b[pos] = val
        try:
            read_srt(bytes(b[: len(b) - cut]))
        except FormatError:
            pass


class TestRt4:
    def test_size(self, tmp_path):
        v = np.arange(16, dtype=np.float32).reshape(2, 2, 2, 2)
        n = write_raw_dense(DenseTensor(v), small_grid(), tmp_path / "a.rt4")
        assert n == RT4_HEADER.size + 16 * 4 == (tmp_path / "a.rt4").stat().st_size
        assert sniff(tmp_path / "a.rt4") == "rt4"
        assert read_rt4_header(tmp_path / "a.rt4")["shape"] == [2, 2, 2, 2]

    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        shape = tuple(rng.integers(1, 5, 4))
        grid = PolarGrid4D(AxisSpec(shape[0], -1, 0.5), AxisSpec(shape[1], 0, 0.7),
                           AxisSpec.centered(shape[2], 0.1), AxisSpec.centered(shape[3], 0.1))
        v = rng.random(shape).astype(np.float32)
        buf = io.BytesIO()
        write_raw_dense(DenseTensor(v), grid, buf)
        t, g = read_raw_dense(buf.getvalue())
        assert g == grid
        assert np.array_equal(t.values.view(np.uint32), v.view(np.uint32))

    def test_version_mismatch(self):
        buf = io.BytesIO()
        write_raw_dense(DenseTensor(np.zeros((2, 2, 2, 2), np.float32)), small_grid(), buf)
        b = bytearray(buf.getvalue())
        b[6] = 2
        with pytest.raises(UnsupportedVersionError):
            read_raw_dense(bytes(b))

    def test_huge_count_is_clean_error(self):
        buf = io.BytesIO()
        write_raw_dense(DenseTensor(np.zeros((2, 2, 2, 2), np.float32)), small_grid(), buf)
        b = bytearray(buf.getvalue())
        struct.pack_into("<Q", b, 8, 2**62)
        with pytest.raises(TruncatedError):
            read_raw_dense(bytes(b))

    def test_not_a_radar_file(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"hello world")
        with pytest.raises(BadMagicError):
            sniff(p)
