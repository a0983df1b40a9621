"""Polar-to-Cartesian resampling onto the RoI voxel grid.

Coordinate convention: x forward, y left, z up. Azimuth is measured in the
xy-plane from +x, elevation from the xy-plane.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .grid import (
    AxisSpec,
    CartesianRoi,
    DenseTensor,
    GridError,
    PolarGrid4D,
    check_shape,
    voxel_centers,
    voxel_count,
)

METHODS = ("trilinear", "nearest")


def cart_to_polar(x, y, z):
    """Return ``(r, az, el)``; scalars or broadcastable arrays."""
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    r = np.sqrt(x * x + y * y + z * z)
    az = np.arctan2(y, x)
    with np.errstate(invalid="ignore", divide="ignore"):
        el = np.where(r > 0, np.arcsin(np.clip(z / np.where(r > 0, r, 1.0), -1.0, 1.0)), 0.0)
    if r.ndim == 0:
        return float(r), float(az), float(el)
    return r, az, el


def polar_to_cart(r, az, el):
    r, az, el = np.asarray(r, float), np.asarray(az, float), np.asarray(el, float)
    ce = np.cos(el)
    x, y, z = r * ce * np.cos(az), r * ce * np.sin(az), r * np.sin(el)
    if x.ndim == 0:
        return float(x), float(y), float(z)
    return x, y, z


@dataclass(frozen=True)
class CartesianField:
    """Resampled power on the RoI voxel grid (the 3DRT-XYZ).

    ``valid`` marks voxels inside polar coverage; invalid voxels hold 0.
    """

    roi: CartesianRoi
    values: DenseTensor
    valid: np.ndarray

    def __post_init__(self):
        shape = voxel_count(self.roi)
        if self.values.shape != shape:
            raise GridError(f"field shape {self.values.shape} does not match RoI {shape}")
        if self.valid.shape != shape or self.valid.dtype != bool:
            raise GridError("valid mask must be a boolean array with the RoI shape")

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid))


def _axis_coords(axis: AxisSpec, coord: np.ndarray):
    """Fractional bin-center coordinate, clamped, plus in-extent mask."""
    inside = (coord >= axis.start) & (coord <= axis.stop)
    u = (coord - axis.start) / axis.step - 0.5
    return np.clip(u, 0.0, axis.count - 1), inside


@dataclass(frozen=True, eq=False)
class ResamplePlan:
    """Precomputed gather indices and fractions for one (grid, roi, method).

    ``index`` has shape (taps, n_valid): 8 trilinear corners ordered
    (range, azimuth, elevation) with elevation fastest, or 1 for nearest.
    ``frac`` is (3, n_valid), the fractional offsets along each polar axis
    (empty for nearest).
    """

    roi: CartesianRoi
    polar_shape: tuple[int, int, int]
    valid: np.ndarray
    voxels: np.ndarray
    index: np.ndarray
    frac: np.ndarray

    @property
    def valid_count(self) -> int:
        return int(self.voxels.size)

    @property
    def weight(self) -> np.ndarray:
        """Equivalent (taps, n_valid) corner weights."""
        if self.index.shape[0] == 1:
            return np.ones(self.index.shape)
        fr, fa, fe = self.frac
        w = [
            (fr if br else 1 - fr) * (fa if ba else 1 - fa) * (fe if be else 1 - fe)
            for br in (0, 1) for ba in (0, 1) for be in (0, 1)
        ]
        return np.stack(w)

    def apply(self, polar: DenseTensor) -> CartesianField:
        if polar.shape != self.polar_shape:
            names = ("range", "azimuth", "elevation")
            if polar.ndim != 3:
                raise GridError(f"expected a 3D polar tensor, got {polar.ndim}D")
            bad = next(i for i in range(3) if polar.shape[i] != self.polar_shape[i])
            raise GridError(
                f"{names[bad]} axis has {polar.shape[bad]} bins but the grid "
                f"defines {self.polar_shape[bad]}",
                axis=names[bad],
            )
        v = polar.values.reshape(-1)[self.index].astype(np.float64, copy=False)
        # nested lerps a + f (b - a): exact on constant fields
        for f in self.frac[::-1]:
            v = v[0::2] + f * (v[1::2] - v[0::2])
        out = np.zeros(self.valid.size, dtype=np.float64)
        out[self.voxels] = v[0]
        values = DenseTensor(out.reshape(self.valid.shape), check=False)
        return CartesianField(self.roi, values, self.valid)


def _build_plan(r_ax, a_ax, e_ax, roi, method) -> ResamplePlan:
    if method not in METHODS:
        raise ValueError(f"unknown interpolation method {method!r}; expected one of {METHODS}")
    xs, ys, zs = voxel_centers(roi)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    r, az, el = cart_to_polar(X.ravel(), Y.ravel(), Z.ravel())
    ur, in_r = _axis_coords(r_ax, r)
    ua, in_a = _axis_coords(a_ax, az)
    ue, in_e = _axis_coords(e_ax, el)
    valid = in_r & in_a & in_e
    voxels = np.flatnonzero(valid)
    ur, ua, ue = ur[voxels], ua[voxels], ue[voxels]
    shape = (r_ax.count, a_ax.count, e_ax.count)

    if method == "nearest":
        idx = np.ravel_multi_index(
            tuple(np.floor(u + 0.5).astype(np.intp) for u in (ur, ua, ue)), shape
        )
        index = idx[None, :].astype(np.int64)
        frac = np.empty((0, voxels.size), dtype=np.float64)
    else:
        lows, highs, fracs = [], [], []
        for u, n in zip((ur, ua, ue), shape):
            i0 = np.minimum(np.floor(u).astype(np.intp), max(n - 2, 0))
            lows.append(i0)
            highs.append(np.minimum(i0 + 1, n - 1))
            fracs.append(u - i0)
        index = np.empty((8, voxels.size), dtype=np.int64)
        for tap, corner in enumerate(np.ndindex(2, 2, 2)):
            sel = tuple(highs[k] if b else lows[k] for k, b in enumerate(corner))
            index[tap] = np.ravel_multi_index(sel, shape)
        frac = np.stack(fracs)

    valid_grid = valid.reshape(voxel_count(roi))
    valid_grid.flags.writeable = False
    for arr in (voxels, index, frac):
        arr.flags.writeable = False
    return ResamplePlan(roi, shape, valid_grid, voxels, index, frac)


@functools.lru_cache(maxsize=16)
def _cached_plan(r_ax, a_ax, e_ax, roi, method):
    return _build_plan(r_ax, a_ax, e_ax, roi, method)


def resample_plan(grid: PolarGrid4D, roi: CartesianRoi, method: str = "trilinear") -> ResamplePlan:
    """Plans are cached per (spatial axes, roi, method) and immutable."""
    return _cached_plan(grid.range, grid.azimuth, grid.elevation, roi, method)


def resample(
    polar: DenseTensor, grid: PolarGrid4D, roi: CartesianRoi, method: str = "trilinear"
) -> CartesianField:
    """Interpolate a Doppler-reduced (R, A, E) tensor onto the RoI voxels.

    Voxel centers outside the physical extent of any polar axis are invalid
    and hold 0. Between the outermost bin center and the grid edge the
    nearest bin is used.
    """
    if polar.ndim != 3:
        raise GridError(f"expected a 3D polar tensor, got {polar.ndim}D")
    check_shape(polar.shape, (grid.range, grid.azimuth, grid.elevation),
                ("range", "azimuth", "elevation"))
    return resample_plan(grid, roi, method).apply(polar)


def coverage_fraction(grid: PolarGrid4D, roi: CartesianRoi) -> float:
    plan = resample_plan(grid, roi)
    return plan.valid_count / plan.valid.size
