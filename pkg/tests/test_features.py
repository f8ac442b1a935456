"""features: magnitude/cosIPD/angle-feature identities and plane-wave oracles."""

import numpy as np
import pytest

from beamkit.features import (
    FeatureStack,
    angle_feature,
    compute_feature_stack,
    cos_ipd,
    load_tensor,
    magnitude_ref,
    save_tensor,
    stack_features,
)
from beamkit.room import ArrayGeometry, linear_array
from beamkit.signal_io import MultichannelWave, Spectrogram, StftConfig, stft

CFG = StftConfig()
ARRAY = linear_array(center=np.zeros(3))
PAIRS = ARRAY.pairs


def spec_from_bins(bins, cfg=CFG):
    return Spectrogram(bins=bins, stft_config=cfg,
                       original_length=(bins.shape[1] - 1) * cfg.hop + cfg.window_len)


def plane_wave_spec(theta_deg, rng, frames=12, cfg=CFG, c=343.0, array=ARRAY):
    """Analytic far-field spectrogram: random envelope times steering phases."""
    freqs = cfg.frequencies(16000)
    taus = array.axial_coordinates() * np.cos(np.radians(theta_deg)) / c
    steering = np.exp(-2j * np.pi * freqs[None, :] * taus[:, None])  # [M x F]
    env = (rng.standard_normal((frames, len(freqs)))
           + 1j * rng.standard_normal((frames, len(freqs))))
    return spec_from_bins(steering[:, None, :] * env[None, :, :], cfg)


class TestMagnitude:
    def test_zero(self):
        spec = spec_from_bins(np.zeros((4, 3, 257), dtype=complex))
        assert np.all(magnitude_ref(spec) == 0.0)

    def test_three_four_five(self):
        bins = np.zeros((1, 3, 257), dtype=complex)
        bins[0, 1, 10] = 3 + 4j
        assert magnitude_ref(spec_from_bins(bins))[10, 1] == pytest.approx(5.0)

    def test_phase_rotation_invariant(self):
        rng = np.random.default_rng(0)
        bins = rng.standard_normal((2, 4, 257)) + 1j * rng.standard_normal((2, 4, 257))
        rotated = bins * np.exp(1j * 0.7)
        a = magnitude_ref(spec_from_bins(bins))
        b = magnitude_ref(spec_from_bins(rotated))
        assert np.abs(a - b).max() < 1e-12


class TestCosIpd:
    def test_identical_channels(self):
        rng = np.random.default_rng(1)
        one = rng.standard_normal((3, 257)) + 1j * rng.standard_normal((3, 257))
        bins = np.stack([one] * 4)
        out = cos_ipd(spec_from_bins(bins), PAIRS)
        assert np.abs(out - 1.0).max() < 1e-12

    def test_opposite_channels(self):
        rng = np.random.default_rng(2)
        one = rng.standard_normal((3, 257)) + 1j * rng.standard_normal((3, 257))
        bins = np.stack([one, -one])
        out = cos_ipd(spec_from_bins(bins), [(0, 1)])
        assert np.abs(out + 1.0).max() < 1e-10

    def test_zero_bins_emit_one(self):
        bins = np.zeros((2, 2, 257), dtype=complex)
        bins[1, :, :] = 1.0  # channel 0 stays zero
        out = cos_ipd(spec_from_bins(bins), [(0, 1)])
        assert np.all(out == 1.0)

    def test_plane_wave_matches_analytic_cosine(self):
        rng = np.random.default_rng(3)
        theta = 40.0
        spec = plane_wave_spec(theta, rng)
        out = cos_ipd(spec, PAIRS)
        freqs = CFG.frequencies(16000)
        d = ARRAY.pair_spacings()
        expected = np.cos(2 * np.pi * freqs[None, :] * d[:, None]
                          * np.cos(np.radians(theta)) / 343.0)
        assert np.abs(out - expected[:, :, None]).max() < 1e-8

    def test_plane_wave_through_stft_integer_delays(self):
        # spacing c/fs puts exact one-sample delays between mics at endfire
        fs, c = 16000, 343.0
        spacing = c / fs
        array = linear_array(num_mics=3, spacing=spacing, pairs=((0, 1), (0, 2)),
                             center=np.zeros(3))
        k = 20  # bin index; f = k * fs / 512
        n = np.arange(4096 + 3)
        tone = np.sin(2 * np.pi * k * n / 512)
        # wave from theta=0 hits mic 0 first; mic m delayed by m samples
        samples = np.stack([tone[3 - m:4096 + 3 - m] for m in range(3)])
        spec = stft(MultichannelWave(samples=samples), CFG)
        out = cos_ipd(spec, array.pairs)
        f_hz = k * fs / 512
        expected = np.cos(2 * np.pi * f_hz * np.array([1, 2]) / fs)
        # check at the tone bin over interior frames
        got = out[:, k, 2:-2]
        assert np.abs(got - expected[:, None]).max() < 1e-6

    def test_scale_invariance(self):
        rng = np.random.default_rng(4)
        spec = plane_wave_spec(70.0, rng)
        scaled = spec_from_bins(spec.bins * 12.5)
        assert np.abs(cos_ipd(spec, PAIRS) - cos_ipd(scaled, PAIRS)).max() < 1e-12


class TestAngleFeature:
    def test_matched_direction_near_one(self):
        rng = np.random.default_rng(5)
        theta = 65.0
        spec = plane_wave_spec(theta, rng)
        af = angle_feature(spec, PAIRS, theta, ARRAY)
        assert af.min() > 1.0 - 1e-8

    def test_random_phases_mean_near_zero(self):
        rng = np.random.default_rng(6)
        bins = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(4, 64, 257)))
        af = angle_feature(spec_from_bins(bins), PAIRS, 50.0, ARRAY)
        assert abs(af.mean()) < 0.05

    def test_broadside_reduces_to_mean_cos_ipd(self):
        rng = np.random.default_rng(7)
        spec = plane_wave_spec(120.0, rng)
        af = angle_feature(spec, PAIRS, 90.0, ARRAY)
        expected = cos_ipd(spec, PAIRS).mean(axis=0)
        assert np.abs(af - expected).max() < 1e-12

    def test_target_direction_beats_interference(self):
        rng = np.random.default_rng(8)
        theta_t, theta_i = 60.0, 110.0
        spec_t = plane_wave_spec(theta_t, rng)
        af_t = angle_feature(spec_t, PAIRS, theta_t, ARRAY)
        af_i = angle_feature(spec_t, PAIRS, theta_i, ARRAY)
        assert af_t.mean() > af_i.mean()

    def test_invalid_theta(self):
        rng = np.random.default_rng(9)
        spec = plane_wave_spec(10.0, rng)
        with pytest.raises(ValueError, match="theta"):
            angle_feature(spec, PAIRS, 200.0, ARRAY)


class TestStack:
    def test_five_planes_and_order(self):
        rng = np.random.default_rng(10)
        spec = plane_wave_spec(45.0, rng)
        stack = compute_feature_stack(spec, ARRAY, 45.0)
        assert stack.num_planes == 5
        assert stack.plane_names == [
            "magnitude", "cos_ipd_0_1", "cos_ipd_0_2", "cos_ipd_0_3",
            "angle_feature",
        ]
        assert np.array_equal(stack.magnitude, magnitude_ref(spec))

    def test_mismatched_frames_rejected(self):
        mag = np.zeros((257, 10))
        ipd = np.zeros((3, 257, 9))
        af = np.zeros((257, 10))
        with pytest.raises(ValueError, match="disagree"):
            stack_features(mag, ipd, af)

    def test_all_finite_for_finite_input(self):
        rng = np.random.default_rng(11)
        bins = rng.standard_normal((4, 6, 257)) * 1e-30
        bins[0, 0, 0] = 0.0
        stack = compute_feature_stack(spec_from_bins(bins.astype(complex)), ARRAY, 30.0)
        assert np.all(np.isfinite(stack.data))


class TestTensorDump:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(12)
        arr = rng.standard_normal((5, 7, 3))
        path = tmp_path / "dump.bkt"
        save_tensor(path, arr, plane_names=["a", "b", "c", "d", "e"])
        back, header = load_tensor(path)
        assert np.array_equal(back, arr)
        assert header["planes"] == ["a", "b", "c", "d", "e"]
