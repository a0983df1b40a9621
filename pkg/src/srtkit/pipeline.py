"""Dense 4DRT -> sparse tensor conversion, in memory and file to file."""

from __future__ import annotations

from pathlib import Path

from .grid import CartesianRoi, DenseTensor, PolarGrid4D, reduce_doppler
from .pool import SparseRadarTensor, top_percent_pool
from .resample import CartesianField, resample
from .srt_io import read_raw_dense, write_srt

DEFAULT_DENSITY = 5.0


def to_field(tensor: DenseTensor, grid: PolarGrid4D, roi: CartesianRoi,
             method: str = "trilinear") -> CartesianField:
    """Doppler mean, then polar-to-Cartesian resampling."""
    return resample(reduce_doppler(tensor, grid), grid, roi, method)


def convert_tensor(tensor: DenseTensor, grid: PolarGrid4D, roi: CartesianRoi,
                   density_percent: float = DEFAULT_DENSITY,
                   method: str = "trilinear") -> SparseRadarTensor:
    return top_percent_pool(to_field(tensor, grid, roi, method), density_percent)


def convert_file(src, dst, roi: CartesianRoi, density_percent: float = DEFAULT_DENSITY,
                 method: str = "trilinear") -> SparseRadarTensor:
    """Read a ``.rt4`` file, convert, and write ``dst`` atomically."""
    tensor, grid = read_raw_dense(src)
    sparse = convert_tensor(tensor, grid, roi, density_percent, method)
    write_srt(sparse, Path(dst))
    return sparse
