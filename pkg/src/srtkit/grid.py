"""Grid and tensor types shared by the pipeline, plus Doppler reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

AXIS_NAMES = ("doppler", "range", "azimuth", "elevation")


class GridError(ValueError):
    """Invalid grid, RoI or tensor shape. ``axis`` names the offending axis."""

    def __init__(self, message: str, axis: str | None = None):
        super().__init__(message)
        self.axis = axis


@dataclass(frozen=True)
class AxisSpec:
    """Uniform bins; bin ``i`` is centered at ``start + (i + 0.5) * step``."""

    count: int
    start: float
    step: float

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise GridError(f"axis count must be a positive integer, got {self.count}")
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise GridError("axis start/step must be finite")
        if not self.step > 0:
            raise GridError(f"axis step must be > 0, got {self.step}")

    @property
    def stop(self) -> float:
        return self.start + self.count * self.step

    def centers(self) -> np.ndarray:
        return self.start + (np.arange(self.count) + 0.5) * self.step

    @classmethod
    def centered(cls, count: int, step: float) -> "AxisSpec":
        """fftshift layout: bin ``count // 2`` is centered on zero."""
        return cls(count, -(count // 2 + 0.5) * step, step)


@dataclass(frozen=True)
class PolarGrid4D:
    doppler: AxisSpec
    range: AxisSpec
    azimuth: AxisSpec
    elevation: AxisSpec

    def __post_init__(self):
        # Range bins may start half a bin below zero so that the DC bin of a
        # range FFT is centered on 0 m; the first center must not be negative.
        if self.range.start + 0.5 * self.range.step < 0:
            raise GridError("first range bin center must be >= 0", axis="range")
        if self.azimuth.start < -math.pi - 1e-12 or self.azimuth.stop > math.pi + 1e-12:
            raise GridError("azimuth span must lie within (-pi, pi]", axis="azimuth")
        half = math.pi / 2
        if self.elevation.start <= -half or self.elevation.stop >= half:
            raise GridError("elevation span must lie within (-pi/2, pi/2)", axis="elevation")

    @property
    def axes(self) -> tuple[AxisSpec, AxisSpec, AxisSpec, AxisSpec]:
        return (self.doppler, self.range, self.azimuth, self.elevation)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(a.count for a in self.axes)

    @property
    def spatial_shape(self) -> tuple[int, int, int]:
        return self.shape[1:]


class DenseTensor:
    """Nonnegative power tensor stored C-contiguous (last axis fastest).

    The array is kept read-only so instances can be shared freely.
    """

    __slots__ = ("_values",)

    def __init__(self, values, *, check: bool = True):
        arr = np.ascontiguousarray(values)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        if check:
            if arr.ndim == 0:
                raise GridError("tensor must have at least one axis")
            if not np.all(np.isfinite(arr)):
                raise GridError("tensor values must be finite")
            if arr.size and arr.min() < 0:
                raise GridError("tensor values must be nonnegative")
        if arr.flags.writeable:
            arr = arr.view()
            arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def shape(self) -> tuple[int, ...]:
        return self._values.shape

    @property
    def ndim(self) -> int:
        return self._values.ndim

    def flat_index(self, index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(index), self.shape))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return (
            self.shape == other.shape
            and self._values.dtype == other._values.dtype
            and np.array_equal(self._values, other._values)
        )

    def __repr__(self):
        return f"DenseTensor(shape={self.shape}, dtype={self._values.dtype})"


@dataclass(frozen=True)
class CartesianRoi:
    """Axis-aligned box in meters, split into cubic voxels of edge ``voxel``."""

    min: tuple[float, float, float]
    max: tuple[float, float, float]
    voxel: float

    def __post_init__(self):
        object.__setattr__(self, "min", tuple(float(v) for v in self.min))
        object.__setattr__(self, "max", tuple(float(v) for v in self.max))
        object.__setattr__(self, "voxel", float(self.voxel))
        if len(self.min) != 3 or len(self.max) != 3:
            raise GridError("RoI corners must be (x, y, z) triples")
        if not all(math.isfinite(v) for v in self.min + self.max + (self.voxel,)):
            raise GridError("RoI values must be finite")
        for name, lo, hi in zip("xyz", self.min, self.max):
            if not lo < hi:
                raise GridError(f"RoI min must be < max on {name}", axis=name)
        if not self.voxel > 0:
            raise GridError(f"voxel size must be > 0, got {self.voxel}")


DEFAULT_ROI = CartesianRoi(min=(0.0, -16.0, -2.0), max=(72.0, 16.0, 7.6), voxel=0.4)


# spans within this fraction of a voxel below a whole count round up to it
VOXEL_TOL = 1e-9


def voxel_count(roi: CartesianRoi) -> tuple[int, int, int]:
    """Per-axis ``floor((max - min) / voxel)``.

    A span that falls short of a whole voxel count only by float rounding
    (9.6 / 0.4 = 23.999999999999996) counts as whole.
    """
    counts = []
    for name, lo, hi in zip("xyz", roi.min, roi.max):
        span = (hi - lo) / roi.voxel
        if not math.isfinite(span):
            raise GridError(f"RoI voxel count along {name} is not finite", axis=name)
        n = math.floor(span + VOXEL_TOL)
        if n < 1:
            raise GridError(f"RoI has no whole voxel along {name}", axis=name)
        counts.append(n)
    return tuple(counts)


def voxel_center(roi: CartesianRoi, index: Sequence[int]) -> tuple[float, float, float]:
    counts = voxel_count(roi)
    if len(index) != 3:
        raise GridError("voxel index must be a triple")
    for name, i, n in zip("xyz", index, counts):
        if not 0 <= i < n:
            raise GridError(f"voxel index {i} out of range [0, {n}) on {name}", axis=name)
    return tuple(lo + (i + 0.5) * roi.voxel for lo, i in zip(roi.min, index))


def voxel_centers(roi: CartesianRoi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-axis 1D arrays of voxel centers."""
    return tuple(
        lo + (np.arange(n) + 0.5) * roi.voxel for lo, n in zip(roi.min, voxel_count(roi))
    )


def check_shape(shape: Sequence[int], axes: Sequence[AxisSpec], names: Sequence[str]) -> None:
    if len(shape) != len(axes):
        raise GridError(f"expected a {len(axes)}D tensor, got {len(shape)}D")
    for n, axis, name in zip(shape, axes, names):
        if n != axis.count:
            raise GridError(
                f"{name} axis has {n} bins but the grid defines {axis.count}", axis=name
            )


def reduce_doppler(t: DenseTensor, grid: PolarGrid4D | None = None) -> DenseTensor:
    """Mean over the Doppler axis: (D, R, A, E) -> (R, A, E)."""
    if t.ndim != 4:
        raise GridError(f"expected a 4D tensor, got {t.ndim}D", axis="doppler")
    if grid is not None:
        check_shape(t.shape, grid.axes, AXIS_NAMES)
    mean = t.values.mean(axis=0, dtype=np.float64)
    return DenseTensor(mean.astype(t.values.dtype, copy=False), check=False)
