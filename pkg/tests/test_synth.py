import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srtkit.grid import GridError
from srtkit.synth import (
    C,
    ChirpConfig,
    SceneError,
    SceneSpec,
    Target,
    VirtualArray,
    beat_frequency,
    beat_signal,
    expected_bins,
    load_scene,
    make_grid,
    parse_scene,
    peak_response,
    range_doppler_response,
    scene_to_dict,
    snr_db,
    synthesize_frame,
)


def argmax4(t):
    return tuple(int(i) for i in np.unravel_index(np.argmax(t.values), t.shape))


class TestFormulas:
    def test_beat_frequency(self):
        cfg = ChirpConfig(slope=3.0e13, sample_rate=40e6)
        assert beat_frequency(0, cfg) == 0
        assert beat_frequency(50, cfg) == pytest.approx(2 * 3.0e13 * 50 / 299792458, rel=1e-15)
        assert beat_frequency(50, cfg) == pytest.approx(1.0007e7, rel=1e-4)
        assert beat_frequency(40, cfg) == pytest.approx(2 * beat_frequency(20, cfg), rel=1e-15)
        with pytest.raises(SceneError):
            beat_frequency(cfg.max_range, cfg)

    def test_beat_frequency_matches_fft_peak(self):
        cfg = ChirpConfig(slope=3.0e13, sample_rate=40e6, samples_per_chirp=512, chirps_per_frame=4)
        arr = VirtualArray(2, 2)
        grid = make_grid(cfg, arr)
        t = synthesize_frame(SceneSpec((Target((50, 0, 0)),)), cfg, arr, grid)
        k = argmax4(t)[1]
        df = cfg.sample_rate / cfg.samples_per_chirp
        assert k == round(1.0007e7 / df)

    def test_resolutions(self):
        cfg = ChirpConfig()
        assert cfg.range_resolution == pytest.approx(C * 12e6 / (2 * 1e13 * 256))
        assert cfg.velocity_resolution == pytest.approx(0.004 / (2 * 128 * 50e-6))
        assert make_grid(cfg, VirtualArray()).shape == (128, 128, 64, 32)

    @given(st.floats(0, 40), st.floats(-9, 9))
    def test_spectrum_matches_full_2d_fft(self, r, v):
        cfg = ChirpConfig(samples_per_chirp=64, chirps_per_frame=32)
        fb = beat_frequency(r, cfg)
        fd = 2 * v / cfg.carrier_wavelength
        x = beat_signal(fb, fd, cfg)
        X = np.fft.fftshift(np.fft.fft2(x), axes=0)
        # Parseval
        lhs = np.sum(np.abs(X) ** 2) / x.size
        assert lhs == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-6)
        rd = range_doppler_response(fb, fd, cfg)
        np.testing.assert_allclose(rd, X[:, :32] / x.size, atol=1e-12)

    def test_on_bin_peak_is_one(self):
        cfg = ChirpConfig()
        fb = 10 * cfg.sample_rate / cfg.samples_per_chirp
        assert np.max(np.abs(range_doppler_response(fb, 0.0, cfg))) == pytest.approx(1.0)


class TestSynthesis:
    def test_empty_scene_is_zero(self, small_radar):
        cfg, arr, grid = small_radar
        t = synthesize_frame(SceneSpec(), cfg, arr, grid)
        assert t.shape == grid.shape and t.values.dtype == np.float32
        assert not t.values.any()

    def test_boresight(self, small_radar):
        cfg, arr, grid = small_radar
        r = 10 * cfg.range_resolution
        t = synthesize_frame(SceneSpec((Target((r, 0, 0), 0, 2.0),)), cfg, arr, grid)
        want = (cfg.chirps_per_frame // 2, 10, arr.azimuth_elements // 2, arr.elevation_elements // 2)
        assert expected_bins(SceneSpec((Target((r, 0, 0)),)), cfg, arr, grid) == [want]
        assert argmax4(t) == want
        assert t.values.max() == pytest.approx(4.0, rel=1e-4)

    def test_doppler(self, small_radar):
        cfg, arr, grid = small_radar
        v = 3 * cfg.velocity_resolution
        sc = SceneSpec((Target((12, 0, 0), v),))
        got = argmax4(synthesize_frame(sc, cfg, arr, grid))
        assert got[0] == cfg.chirps_per_frame // 2 + 3 == expected_bins(sc, cfg, arr, grid)[0][0]

    def test_two_targets(self, small_radar):
        cfg, arr, grid = small_radar
        sc = SceneSpec((Target((10, 2, 0)), Target((30, -8, 3), 2.0)))
        bins = expected_bins(sc, cfg, arr, grid)
        assert len(set(bins)) == 2

    def test_random_targets_within_one_bin(self, small_radar):
        cfg, arr, grid = small_radar
        rng = np.random.default_rng(8)
        for _ in range(25):
            r = rng.uniform(3, 0.9 * cfg.max_range)
            az, el = math.radians(rng.uniform(-45, 45)), math.radians(rng.uniform(-14, 14))
            p = (r * math.cos(el) * math.cos(az), r * math.cos(el) * math.sin(az), r * math.sin(el))
            sc = SceneSpec((Target(p, rng.uniform(-8, 8)),))
            got = argmax4(synthesize_frame(sc, cfg, arr, grid))
            assert max(abs(a - b) for a, b in zip(got, expected_bins(sc, cfg, arr, grid)[0])) <= 1

    def test_peak_response(self, small_radar):
        cfg, arr, grid = small_radar
        tg = Target((17.3, 1.1, 0.4), 1.3, 3.0)
        t = synthesize_frame(SceneSpec((tg,)), cfg, arr, grid)
        assert peak_response(tg, cfg, arr, grid) == pytest.approx(float(t.values.max()), rel=1e-4)
        assert snr_db(tg, 0.0, cfg, arr, grid) == math.inf

    def test_amplitude_monotone(self, small_radar):
        cfg, arr, grid = small_radar
        peaks = [
            synthesize_frame(SceneSpec((Target((15, 0, 0), 0, a),)), cfg, arr, grid).values.max()
            for a in (0.5, 1.0, 2.0)
        ]
        assert peaks[0] < peaks[1] < peaks[2]

    def test_noise_floor(self, small_radar):
        cfg, arr, grid = small_radar
        t = synthesize_frame(SceneSpec(noise_floor=2.0, seed=3), cfg, arr, grid)
        assert float(t.values.mean()) == pytest.approx(2.0, rel=0.03)

    def test_deterministic(self, small_radar):
        cfg, arr, grid = small_radar
        sc = SceneSpec((Target((20, 3, 1), 1.0, 5.0),), noise_floor=1.0, seed=42)
        a = synthesize_frame(sc, cfg, arr, grid, 3)
        assert a == synthesize_frame(sc, cfg, arr, grid, 3)
        assert a != synthesize_frame(sc, cfg, arr, grid, 4)

    def test_grid_mismatch(self, small_radar):
        cfg, arr, _ = small_radar
        with pytest.raises(GridError):
            synthesize_frame(SceneSpec(), cfg, arr, make_grid(cfg, VirtualArray(8, 8)))

    def test_out_of_range_target(self, small_radar):
        cfg, arr, grid = small_radar
        with pytest.raises(SceneError):
            synthesize_frame(SceneSpec((Target((500, 0, 0)),)), cfg, arr, grid)
        with pytest.raises(SceneError):
            expected_bins(SceneSpec((Target((10, 0, 0), 1e3),)), cfg, arr, grid)


class TestSceneFiles:
    def test_round_trip(self, tmp_path):
        doc = {"seed": 7, "noise_floor": 0.5,
               "targets": [{"position": [10, 1, 0], "radial_velocity": 1.5, "amplitude": 4}],
               "chirp": {"samples_per_chirp": 64}, "fov_deg": {"azimuth": 40}}
        p = tmp_path / "s.json"
        p.write_text(json.dumps(doc))
        sf = load_scene(p)
        assert sf.chirp.samples_per_chirp == 64 and sf.azimuth_fov_deg == 40
        assert parse_scene(scene_to_dict(sf)) == sf

    @pytest.mark.parametrize("doc", [
        {"targets": [{"pos": [1, 2, 3]}]},
        {"bogus": 1},
        {"chirp": {"slope": -1}},
        {"seed": -1},
        {"array": {"azimuth_elements": 3}},
    ])
    def test_rejects(self, doc):
        with pytest.raises(SceneError):
            parse_scene(doc)
