"""Top-N% power pooling: turns a CartesianField into a sparse radar tensor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grid import CartesianRoi, voxel_count
from .resample import CartesianField


class PoolError(ValueError):
    pass


def check_density(density_percent: float) -> float:
    d = float(density_percent)
    if not (math.isfinite(d) and 0 < d <= 100):
        raise PoolError(f"density must be in (0, 100], got {density_percent!r}")
    return d


def retained_count(density_percent: float, valid_count: int) -> int:
    """``min(ceil(N/100 * valid_count), valid_count)``, computed exactly.

    The density is taken at its shortest decimal representation, so 0.01 means
    exactly 1/10000 rather than its binary approximation.
    """
    d = Fraction(repr(check_density(density_percent)))
    return min(math.ceil(d * valid_count / 100), valid_count)


@dataclass(frozen=True, eq=False)
class SparseRadarTensor:
    """Retained voxels sorted by linear index (x slowest, z fastest).

    ``indices`` is (K, 3) uint16, ``powers`` is (K,) float32.
    """

    roi: CartesianRoi
    density_percent: float
    indices: np.ndarray
    powers: np.ndarray
    source_valid_count: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.uint16).reshape(-1, 3)
        pw = np.ascontiguousarray(self.powers, dtype=np.float32).reshape(-1)
        if idx.shape[0] != pw.shape[0]:
            raise PoolError("indices and powers differ in length")
        idx.flags.writeable = False
        pw.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "powers", pw)
        object.__setattr__(self, "density_percent", float(self.density_percent))
        object.__setattr__(self, "source_valid_count", int(self.source_valid_count))

    def __len__(self) -> int:
        return int(self.powers.shape[0])

    @property
    def linear_indices(self) -> np.ndarray:
        return np.ravel_multi_index(self.indices.T.astype(np.intp), voxel_count(self.roi))

    def centers(self) -> np.ndarray:
        """Voxel centers of the retained elements, (K, 3) meters."""
        lo = np.asarray(self.roi.min)
        return lo + (self.indices.astype(np.float64) + 0.5) * self.roi.voxel

    def __eq__(self, other):
        if not isinstance(other, SparseRadarTensor):
            return NotImplemented
        return (
            self.roi == other.roi
            and self.density_percent == other.density_percent
            and self.source_valid_count == other.source_valid_count
            and np.array_equal(self.indices, other.indices)
            # compare bit patterns so -0.0/0.0 and NaN payloads count
            and np.array_equal(self.powers.view(np.uint32), other.powers.view(np.uint32))
        )

    def __repr__(self):
        return (
            f"SparseRadarTensor(density={self.density_percent}%, elements={len(self)}, "
            f"source_valid_count={self.source_valid_count})"
        )


def _select(values: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k largest values, ties to the lower position.

    Expected O(n): one introselect pass for the threshold, then masks.
    Returned positions are ascending.
    """
    n = values.size
    if k == n:
        return np.arange(n)
    kth = values[np.argpartition(values, n - k)[n - k]]
    above = np.flatnonzero(values > kth)
    need = k - above.size
    tied = np.flatnonzero(values == kth)[:need]
    out = np.concatenate([above, tied])
    out.sort(kind="stable")
    return out


def _valid_values(field: CartesianField):
    flat_valid = np.flatnonzero(field.valid.reshape(-1))
    if flat_valid.size == 0:
        raise PoolError("field has no valid voxels")
    return flat_valid, field.values.values.reshape(-1)[flat_valid]


def top_percent_pool(field: CartesianField, density_percent: float) -> SparseRadarTensor:
    k = retained_count(density_percent, field.valid_count)
    flat_valid, vals = _valid_values(field)
    if k == 0:
        raise PoolError("field has no valid voxels")
    chosen = flat_valid[_select(vals, k)]
    idx = np.stack(np.unravel_index(chosen, field.valid.shape), axis=1)
    return SparseRadarTensor(
        roi=field.roi,
        density_percent=density_percent,
        indices=idx,
        powers=field.values.values.reshape(-1)[chosen],
        source_valid_count=flat_valid.size,
    )


def selection_threshold(field: CartesianField, density_percent: float) -> float:
    """The smallest retained power, i.e. the K-th largest valid power."""
    k = retained_count(density_percent, field.valid_count)
    _, vals = _valid_values(field)
    if k == 0:
        raise PoolError("field has no valid voxels")
    n = vals.size
    return float(vals[np.argpartition(vals, n - k)[n - k]])
