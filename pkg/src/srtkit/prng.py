"""Philox4x32-10 counter-based generator and complex Gaussian noise fields.

Every output is a pure function of (key, counter), so noise for any
(frame, element, sample) is produced independently of how the work is
split. The block function reproduces the Random123 known-answer vectors.
"""

from __future__ import annotations

import numba
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_S32 = np.uint64(32)
_MASK32 = 0xFFFFFFFF


@numba.njit(inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r:
            k0 = np.uint32(k0 + _W0)
            k1 = np.uint32(k1 + _W1)
        p0 = _M0 * np.uint64(c0)
        p1 = _M1 * np.uint64(c2)
        c0, c1, c2, c3 = (
            np.uint32(np.uint32(p1 >> _S32) ^ c1 ^ k0),
            np.uint32(p1),
            np.uint32(np.uint32(p0 >> _S32) ^ c3 ^ k1),
            np.uint32(p0),
        )
    return c0, c1, c2, c3


@numba.njit(cache=True)
def _block(c0, c1, c2, c3, k0, k1):
    return philox4x32(c0, c1, c2, c3, k0, k1)


def philox_block(counter, key) -> tuple[int, int, int, int]:
    """One Philox4x32-10 block: four 32-bit words from a 4-word counter and 2-word key."""
    c = [np.uint32(v & _MASK32) for v in counter]
    k = [np.uint32(v & _MASK32) for v in key]
    return tuple(int(v) for v in _block(c[0], c[1], c[2], c[3], k[0], k[1]))


def _ziggurat_tables():
    # Marsaglia & Tsang (2000), 128 layers
    dn = tn = 3.442619855899
    vn = 9.91256303526217e-3
    m1 = 2147483648.0
    kn = np.zeros(128, dtype=np.float64)
    wn = np.zeros(128, dtype=np.float64)
    fn = np.zeros(128, dtype=np.float64)
    q = vn / np.exp(-0.5 * dn * dn)
    kn[0] = (dn / q) * m1
    kn[1] = 0.0
    wn[0] = q / m1
    wn[127] = dn / m1
    fn[0] = 1.0
    fn[127] = np.exp(-0.5 * dn * dn)
    for i in range(126, 0, -1):
        dn = np.sqrt(-2.0 * np.log(vn / dn + np.exp(-0.5 * dn * dn)))
        kn[i + 1] = (dn / tn) * m1
        tn = dn
        fn[i] = np.exp(-0.5 * dn * dn)
        wn[i] = dn / m1
    return kn, wn, fn


_KN, _WN, _FN = _ziggurat_tables()
_TAIL = 3.442619855899


@numba.njit(inline="always")
def _unit(x):
    # uniform on the open interval (0, 1)
    return (np.float64(x) + 0.5) * (1.0 / 4294967296.0)


@numba.njit(inline="always")
def _signed(x):
    return np.int64(np.int32(x))


@numba.njit(inline="always")
def _slow_normal(hz, iz, c0, c1, c2, lane, k0, k1, kn, wn, fn):
    # Rejection path; each attempt draws a fresh block from counter word 3.
    attempt = 0
    while True:
        attempt += 1
        w0, w1, w2, w3 = philox4x32(c0, c1, c2, np.uint32(2 * attempt - 1 + lane), k0, k1)
        if iz == 0:
            # beyond the base strip: sample the tail until accepted
            x = -np.log(_unit(w0)) / _TAIL
            y = -np.log(_unit(w1))
            if y + y >= x * x:
                return _TAIL + x if hz > 0 else -_TAIL - x
            continue
        x = hz * wn[iz]
        if fn[iz] + _unit(w0) * (fn[iz - 1] - fn[iz]) < np.exp(-0.5 * x * x):
            return x
        iz = np.int64(w2 & np.uint32(127))
        hz = _signed(w3)
        if abs(hz) < kn[iz]:
            return hz * wn[iz]


@numba.njit(inline="always")
def _normal(wa, wb, c0, c1, c2, lane, k0, k1, kn, wn, fn):
    iz = np.int64(wa & np.uint32(127))
    hz = _signed(wb)
    if abs(hz) < kn[iz]:
        return hz * wn[iz]
    return _slow_normal(hz, iz, c0, c1, c2, lane, k0, k1, kn, wn, fn)


@numba.njit(cache=True)
def _fill_noise(k0, k1, frame, nsamples, nstreams, scale, kn, wn, fn, out):
    # out is (nsamples, nstreams) viewed as (rows, nsamples, cols) with
    # stream s = col * rows + row; the layout never changes the values.
    rows, _, cols = out.shape
    for row in range(rows):
        for i in range(nsamples):
            c0 = np.uint32(i)
            for col in range(cols):
                c1 = np.uint32(col * rows + row)
                w0, w1, w2, w3 = philox4x32(c0, c1, frame, np.uint32(0), k0, k1)
                re = _normal(w0, w1, c0, c1, frame, 0, k0, k1, kn, wn, fn)
                im = _normal(w2, w3, c0, c1, frame, 1, k0, k1, kn, wn, fn)
                out[row, i, col] = complex(scale * re, scale * im)


def standard_normal(seed: int, frame: int, nsamples: int, nstreams: int) -> np.ndarray:
    """Real N(0, 1) samples, (nsamples, 2 * nstreams) float64.

    Columns ``2s`` and ``2s + 1`` are the real and imaginary draws of stream
    ``s``; exposed for distribution tests.
    """
    z = _noise(seed, frame, nsamples, nstreams, 1, 1.0, np.complex128)
    return z[0].view(np.float64)


def _noise(seed, frame, nsamples, nstreams, rows, scale, dtype):
    if nsamples > _MASK32 + 1 or nstreams > _MASK32 + 1:
        raise ValueError("noise field too large for 32-bit counters")
    if nstreams % rows:
        raise ValueError("rows must divide the stream count")
    seed &= 0xFFFFFFFFFFFFFFFF
    out = np.empty((rows, nsamples, nstreams // rows), dtype=dtype)
    _fill_noise(
        np.uint32(seed & _MASK32), np.uint32(seed >> 32), np.uint32(frame & _MASK32),
        nsamples, nstreams, scale, _KN, _WN, _FN, out,
    )
    return out


def complex_noise(seed: int, frame: int, nsamples: int, nstreams: int, power: float,
                  rows: int = 1) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|z|^2 = power``, complex64.

    Sample ``i`` of stream ``s`` is drawn by ziggurat from counter
    ``(i, s, frame, 0)`` under the 64-bit ``seed`` split into two key words;
    rare rejections continue on counter word 3, so every sample depends only
    on its own indices.

    With ``rows == 1`` the result is (nsamples, nstreams). Otherwise streams
    are split as ``s = col * rows + row`` and the result is laid out
    (rows, nsamples, nstreams // rows).
    """
    out = _noise(seed, frame, nsamples, nstreams, rows, float(np.sqrt(power / 2.0)), np.complex64)
    return out[0] if rows == 1 else out
