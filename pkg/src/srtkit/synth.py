"""Synthetic FMCW 4D radar tensors with analytically known point targets.

Signal chain per frame: complex beat signal per (chirp, sample, array
element) -> range FFT over fast time (first half kept) -> Doppler FFT over
slow time (fftshift) -> beamforming over the planar array -> squared
magnitude. Output axes are (Doppler, range, azimuth, elevation).

Scene files are JSON::

    {
      "seed": 7,                     # optional, u64
      "noise_floor": 1.0,            # mean noise power per output cell
      "targets": [
        {"position": [x, y, z], "radial_velocity": 0.0, "amplitude": 30.0}
      ],
      "chirp": {...},                # optional ChirpConfig overrides
      "array": {...},                # optional VirtualArray overrides
      "fov_deg": {"azimuth": 53, "elevation": 18}   # optional half-spans
    }

``amplitude`` is in output units: an on-bin target with no noise peaks at
``amplitude**2``. ``radial_velocity`` is the range rate (positive = receding).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numba
import numpy as np

from .grid import AxisSpec, DenseTensor, GridError, PolarGrid4D
from .prng import complex_noise
from .resample import cart_to_polar

C = 299_792_458.0


class SceneError(ValueError):
    pass


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ChirpConfig:
    carrier_wavelength: float = 0.004
    slope: float = 1.0e13
    sample_rate: float = 12.0e6
    samples_per_chirp: int = 256
    chirps_per_frame: int = 128
    chirp_interval: float = 50e-6

    def __post_init__(self):
        for name in ("carrier_wavelength", "slope", "sample_rate", "chirp_interval"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise SceneError(f"{name} must be positive, got {v}")
        for name in ("samples_per_chirp", "chirps_per_frame"):
            v = getattr(self, name)
            if int(v) != v or not _is_pow2(int(v)) or v < 2:
                raise SceneError(f"{name} must be a power of two >= 2, got {v}")

    @property
    def range_resolution(self) -> float:
        return C * self.sample_rate / (2 * self.slope * self.samples_per_chirp)

    @property
    def velocity_resolution(self) -> float:
        return self.carrier_wavelength / (2 * self.chirps_per_frame * self.chirp_interval)

    @property
    def max_range(self) -> float:
        """Unambiguous range of the one-sided range spectrum."""
        return self.sample_rate * C / (2 * self.slope) / 2


@dataclass(frozen=True)
class VirtualArray:
    """Uniform planar array, half-wavelength spacing (y: azimuth, z: elevation)."""

    azimuth_elements: int = 64
    elevation_elements: int = 32

    def __post_init__(self):
        for name in ("azimuth_elements", "elevation_elements"):
            v = getattr(self, name)
            if int(v) != v or not _is_pow2(int(v)):
                raise SceneError(f"{name} must be a power of two >= 1, got {v}")


@dataclass(frozen=True)
class Target:
    position: tuple[float, float, float]
    radial_velocity: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise SceneError(f"target position must be a finite (x, y, z), got {self.position}")
        object.__setattr__(self, "position", pos)
        if not math.isfinite(self.radial_velocity):
            raise SceneError("radial_velocity must be finite")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise SceneError("amplitude must be finite and >= 0")


@dataclass(frozen=True)
class SceneSpec:
    targets: tuple[Target, ...] = ()
    noise_floor: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not (math.isfinite(self.noise_floor) and self.noise_floor >= 0):
            raise SceneError("noise_floor must be finite and >= 0")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise SceneError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SceneFile:
    scene: SceneSpec
    chirp: ChirpConfig = field(default_factory=ChirpConfig)
    array: VirtualArray = field(default_factory=VirtualArray)
    azimuth_fov_deg: float = 53.0
    elevation_fov_deg: float = 18.0

    def grid(self) -> PolarGrid4D:
        return make_grid(self.chirp, self.array, self.azimuth_fov_deg, self.elevation_fov_deg)


def peak_response(target: Target, cfg: ChirpConfig, array: VirtualArray,
                  grid: PolarGrid4D) -> float:
    """Largest cell of the target's noise-free power response.

    Includes the straddle loss of a target that falls between bins, so it
    is the power actually seen at the peak.
    """
    r, _, _ = cart_to_polar(*target.position)
    rd = range_doppler_response(
        beat_frequency(r, cfg), doppler_frequency(target.radial_velocity, cfg), cfg
    )
    w_el, w_az = steering(array, grid)
    y = element_phasors(target.position, array) @ w_el.astype(np.complex128)  # (A_el, E)
    ang = np.einsum("me,ema->ae", y, w_az.astype(np.complex128))
    return float(target.amplitude**2 * np.max(np.abs(rd)) ** 2 * np.max(np.abs(ang)) ** 2)


def snr_db(target: Target, noise_floor: float, cfg: ChirpConfig, array: VirtualArray,
           grid: PolarGrid4D) -> float:
    """Peak SNR of a target in the 4D tensor, straddle loss included."""
    if noise_floor == 0:
        return math.inf
    return 10 * math.log10(peak_response(target, cfg, array, grid) / noise_floor)


def make_grid(
    cfg: ChirpConfig,
    array: VirtualArray,
    azimuth_fov_deg: float = 53.0,
    elevation_fov_deg: float = 18.0,
) -> PolarGrid4D:
    """Polar grid matching the FFT bins of ``cfg``; angles span +-fov.

    Doppler and angle axes are centered (bin ``n // 2`` at zero). Range bin
    ``k`` is centered on ``k * range_resolution``.
    """
    dr = cfg.range_resolution
    az_step = 2 * math.radians(azimuth_fov_deg) / array.azimuth_elements
    el_step = 2 * math.radians(elevation_fov_deg) / array.elevation_elements
    return PolarGrid4D(
        doppler=AxisSpec.centered(cfg.chirps_per_frame, cfg.velocity_resolution),
        range=AxisSpec(cfg.samples_per_chirp // 2, -0.5 * dr, dr),
        azimuth=AxisSpec.centered(array.azimuth_elements, az_step),
        elevation=AxisSpec.centered(array.elevation_elements, el_step),
    )


def _check_grid(cfg: ChirpConfig, array: VirtualArray, grid: PolarGrid4D) -> None:
    expected = (cfg.chirps_per_frame, cfg.samples_per_chirp // 2,
                array.azimuth_elements, array.elevation_elements)
    for name, got, want in zip(("doppler", "range", "azimuth", "elevation"), grid.shape, expected):
        if got != want:
            raise GridError(f"{name} axis has {got} bins, the radar produces {want}", axis=name)
    ref = make_grid(cfg, array)
    for name in ("doppler", "range"):
        a, b = getattr(grid, name), getattr(ref, name)
        if not (math.isclose(a.start, b.start, rel_tol=1e-9, abs_tol=1e-12)
                and math.isclose(a.step, b.step, rel_tol=1e-9)):
            raise GridError(f"{name} axis does not match the chirp configuration", axis=name)


def beat_frequency(range_m: float, cfg: ChirpConfig) -> float:
    if not (0 <= range_m < cfg.max_range):
        raise SceneError(f"range {range_m} m outside [0, {cfg.max_range:.3f}) m")
    return 2 * cfg.slope * range_m / C


def doppler_frequency(velocity: float, cfg: ChirpConfig) -> float:
    fd = 2 * velocity / cfg.carrier_wavelength
    if not abs(fd) < 0.5 / cfg.chirp_interval:
        raise SceneError(f"radial velocity {velocity} m/s is Doppler-ambiguous")
    return fd


def _nearest_bin(axis: AxisSpec, value: float, name: str) -> int:
    i = math.floor((value - axis.start) / axis.step)
    if not 0 <= i < axis.count:
        raise SceneError(f"target {name} {value:.6g} outside the grid")
    # bin i spans [start + i*step, start + (i+1)*step), i.e. nearest center
    return i


def expected_bins(scene: SceneSpec, cfg: ChirpConfig, array: VirtualArray,
                  grid: PolarGrid4D) -> list[tuple[int, int, int, int]]:
    """Analytic peak bin (doppler, range, azimuth, elevation) of each target."""
    _check_grid(cfg, array, grid)
    out = []
    d_count = cfg.chirps_per_frame
    df = cfg.sample_rate / cfg.samples_per_chirp
    for t in scene.targets:
        r, az, el = cart_to_polar(*t.position)
        fb = beat_frequency(r, cfg)
        fd = doppler_frequency(t.radial_velocity, cfg)
        kr = math.floor(fb / df + 0.5)
        kd = d_count // 2 + math.floor(fd * d_count * cfg.chirp_interval + 0.5)
        if not kr < grid.range.count:
            raise SceneError(f"target range {r:.3f} m beyond the last range bin")
        if not 0 <= kd < d_count:
            raise SceneError(f"radial velocity {t.radial_velocity} m/s outside the Doppler grid")
        out.append((kd, kr, _nearest_bin(grid.azimuth, az, "azimuth"),
                    _nearest_bin(grid.elevation, el, "elevation")))
    return out


def _tones(fb: float, fd: float, cfg: ChirpConfig):
    fast = np.exp(2j * np.pi * fb / cfg.sample_rate * np.arange(cfg.samples_per_chirp))
    slow = np.exp(2j * np.pi * fd * cfg.chirp_interval * np.arange(cfg.chirps_per_frame))
    return slow, fast


def beat_signal(fb: float, fd: float, cfg: ChirpConfig) -> np.ndarray:
    """Unit-amplitude beat samples of one target, (chirp, fast-time sample)."""
    slow, fast = _tones(fb, fd, cfg)
    return np.outer(slow, fast)


def range_doppler_response(fb: float, fd: float, cfg: ChirpConfig) -> np.ndarray:
    """Normalized (D, R) spectrum of one unit-amplitude target.

    The beat signal is separable, so this is the outer product of the
    slow-time and fast-time FFTs: the same numbers as an fftshifted 2D FFT
    of :func:`beat_signal` with the first half of range kept, divided by
    D * N. An on-bin tone peaks at exactly 1.
    """
    slow, fast = _tones(fb, fd, cfg)
    rng = np.fft.fft(fast)[: cfg.samples_per_chirp // 2] / cfg.samples_per_chirp
    dop = np.fft.fftshift(np.fft.fft(slow)) / cfg.chirps_per_frame
    return np.outer(dop, rng)


def steering(array: VirtualArray, grid: PolarGrid4D) -> tuple[np.ndarray, np.ndarray]:
    """Normalized beamforming weights.

    Returns ``w_el`` (E_el, E) and ``w_az`` (E, A_el, A). Elevation is
    formed first; the azimuth weights depend on the elevation bin through
    the ``cos(el)`` factor of a planar array.
    """
    az = grid.azimuth.centers()
    el = grid.elevation.centers()
    m = np.arange(array.azimuth_elements)
    k = np.arange(array.elevation_elements)
    w_el = np.exp(-1j * np.pi * np.outer(k, np.sin(el))) / array.elevation_elements
    u = np.cos(el)[:, None, None] * np.sin(az)[None, None, :]
    w_az = np.exp(-1j * np.pi * m[None, :, None] * u) / array.azimuth_elements
    return w_el.astype(np.complex64), w_az.astype(np.complex64)


def element_phasors(position, array: VirtualArray) -> np.ndarray:
    """(A_el, E_el) phase pattern of a far-field target across the array."""
    r, _, _ = cart_to_polar(*position)
    uy, uz = (position[1] / r, position[2] / r) if r > 0 else (0.0, 0.0)
    m = np.arange(array.azimuth_elements)[:, None]
    k = np.arange(array.elevation_elements)[None, :]
    return np.exp(1j * np.pi * (m * uy + k * uz))


def synthesize_frame(scene: SceneSpec, cfg: ChirpConfig, array: VirtualArray,
                     grid: PolarGrid4D, frame_index: int = 0) -> DenseTensor:
    """Dense (D, R, A, E) float32 power tensor for one frame.

    Each target's beat signal is separable across fast time, slow time and
    array elements, so its range-Doppler spectrum is the outer product of
    two 1D FFTs. Receiver noise is white circular Gaussian; the range and
    Doppler FFTs are unitary up to scale, so it is drawn directly in the
    range-Doppler domain with the matching per-cell power, one Philox
    stream per (frame, element).
    """
    _check_grid(cfg, array, grid)
    D, R, A, E = grid.shape
    n_az, n_el = array.azimuth_elements, array.elevation_elements

    # element-domain cube laid out (elevation element, DR, azimuth element)
    if scene.noise_floor > 0:
        cube = complex_noise(scene.seed, frame_index, D * R, n_az * n_el,
                             scene.noise_floor * n_az * n_el, rows=n_el)
    else:
        cube = np.zeros((n_el, D * R, n_az), dtype=np.complex64)

    for t in scene.targets:
        r, _, _ = cart_to_polar(*t.position)
        fb = beat_frequency(r, cfg)
        fd = doppler_frequency(t.radial_velocity, cfg)
        phase = 4 * np.pi * r / cfg.carrier_wavelength
        rd = (t.amplitude * np.exp(1j * phase)) * range_doppler_response(fb, fd, cfg)
        p = element_phasors(t.position, array).T
        _add_outer(cube, p.astype(np.complex64), rd.ravel().astype(np.complex64))

    w_el, w_az = steering(array, grid)
    y = (w_el.T @ cube.reshape(n_el, -1)).reshape(E, D * R, n_az)
    del cube
    z = np.matmul(y, w_az)                             # (E, DR, A)
    del y
    power = np.empty((D, R, A, E), dtype=np.float32)
    _power_to_drae(z, power.reshape(D * R, A, E))
    return DenseTensor(power, check=False)


@numba.njit(cache=True)
def _add_outer(cube, p, rd):
    K, N, M = cube.shape
    for k in range(K):
        for i in range(N):
            for m in range(M):
                cube[k, i, m] += p[k, m] * rd[i]


@numba.njit(cache=True)
def _power_to_drae(z, out):
    E, DR, A = z.shape
    for i in range(DR):
        for a in range(A):
            for e in range(E):
                v = z[e, i, a]
                out[i, a, e] = v.real * v.real + v.imag * v.imag


def _from_dict(cls, data: dict | None):
    if data is None:
        return cls()
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise SceneError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**data)


def parse_scene(doc: dict) -> SceneFile:
    allowed = {"seed", "noise_floor", "targets", "chirp", "array", "fov_deg"}
    unknown = set(doc) - allowed
    if unknown:
        raise SceneError(f"unknown scene keys: {sorted(unknown)}")
    try:
        targets = tuple(
            Target(tuple(t["position"]), float(t.get("radial_velocity", 0.0)),
                   float(t.get("amplitude", 1.0)))
            for t in doc.get("targets", [])
        )
    except (KeyError, TypeError) as exc:
        raise SceneError(f"malformed target entry: {exc}") from None
    scene = SceneSpec(targets, float(doc.get("noise_floor", 0.0)), int(doc.get("seed", 0)))
    fov = doc.get("fov_deg", {})
    return SceneFile(
        scene=scene,
        chirp=_from_dict(ChirpConfig, doc.get("chirp")),
        array=_from_dict(VirtualArray, doc.get("array")),
        azimuth_fov_deg=float(fov.get("azimuth", 53.0)),
        elevation_fov_deg=float(fov.get("elevation", 18.0)),
    )


def load_scene(path) -> SceneFile:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SceneError(f"{path}: scene must be a JSON object")
    return parse_scene(doc)


def scene_to_dict(sf: SceneFile) -> dict:
    return {
        "seed": sf.scene.seed,
        "noise_floor": sf.scene.noise_floor,
        "targets": [
            {"position": list(t.position), "radial_velocity": t.radial_velocity,
             "amplitude": t.amplitude}
            for t in sf.scene.targets
        ],
        "chirp": asdict(sf.chirp),
        "array": asdict(sf.array),
        "fov_deg": {"azimuth": sf.azimuth_fov_deg, "elevation": sf.elevation_fov_deg},
    }


def with_seed(sf: SceneFile, seed: int) -> SceneFile:
    return replace(sf, scene=replace(sf.scene, seed=seed))
