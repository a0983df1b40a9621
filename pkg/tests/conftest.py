import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from srtkit.grid import CartesianRoi, DenseTensor
from srtkit.resample import CartesianField
from srtkit.synth import ChirpConfig, VirtualArray, make_grid

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def make_field(values, valid=None, voxel=1.0):
    """CartesianField over a unit-voxel RoI with the given 3D values."""
    values = np.asarray(values, dtype=np.float64)
    if valid is None:
        valid = np.ones(values.shape, dtype=bool)
    values = np.where(valid, values, 0.0)
    roi = CartesianRoi((0.0, 0.0, 0.0), tuple(float(n) * voxel for n in values.shape), voxel)
    return CartesianField(roi, DenseTensor(values), np.asarray(valid, dtype=bool))


@pytest.fixture(scope="session")
def small_radar():
    """A small FMCW configuration that synthesizes in milliseconds."""
    cfg = ChirpConfig(samples_per_chirp=64, chirps_per_frame=16)
    arr = VirtualArray(azimuth_elements=16, elevation_elements=8)
    return cfg, arr, make_grid(cfg, arr)
