"""Sparse 4D radar tensors: Doppler reduction, Cartesian resampling, top-N% pooling and a compact file format."""

__version__ = "0.1.0"

from .grid import (  # noqa: E402
    DEFAULT_ROI,
    AxisSpec,
    CartesianRoi,
    DenseTensor,
    GridError,
    PolarGrid4D,
    reduce_doppler,
    voxel_center,
    voxel_count,
)
from .pipeline import convert_file, convert_tensor  # noqa: E402
from .pool import SparseRadarTensor, retained_count, top_percent_pool  # noqa: E402
from .resample import CartesianField, resample, resample_plan  # noqa: E402
from .srt_io import FormatError, read_raw_dense, read_srt, write_raw_dense, write_srt  # noqa: E402

__all__ = [
    "AxisSpec", "CartesianField", "CartesianRoi", "DEFAULT_ROI", "DenseTensor", "FormatError",
    "GridError", "PolarGrid4D", "SparseRadarTensor", "convert_file", "convert_tensor",
    "read_raw_dense", "read_srt", "reduce_doppler", "resample", "resample_plan",
    "retained_count", "top_percent_pool", "voxel_center", "voxel_count", "write_raw_dense",
    "write_srt",
]
