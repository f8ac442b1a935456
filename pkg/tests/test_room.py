"""room: image-source geometry oracles, mixing invariants, scene sampling."""

import numpy as np
import pytest

from beamkit.room import (
    ArrayGeometry,
    MixtureScene,
    RoomConfig,
    SceneSimConfig,
    doa_of,
    draw_scene_params,
    generate_scene,
    linear_array,
    load_scene,
    mix_scene,
    pink_noise,
    save_scene,
    simulate_rir,
    synth_speech_like,
)
from beamkit.signal_io import MultichannelWave


def schroeder_t60(h, fs):
    """Backward-integrated energy decay time to -60 dB (test oracle)."""
    energy = h ** 2
    edc = np.cumsum(energy[::-1])[::-1]
    edc_db = 10 * np.log10(np.maximum(edc / edc[0], 1e-30))
    idx = np.argmax(edc_db <= -60.0)
    assert edc_db[idx] <= -60.0, "RIR too short to reach -60 dB"
    return idx / fs


class TestSimulateRir:
    def test_anechoic_direct_path(self):
        # source exactly 1 m from mic 0: tap round(fs/c), amplitude 1/(4 pi)
        room = RoomConfig(dimensions=np.array([6.0, 5.0, 2.5]), rt60=0.0,
                          max_image_order=0)
        array = linear_array(center=np.array([2.0, 2.0, 1.2]))
        source = array.mic_positions[0] + np.array([0.0, 1.0, 0.0])
        rir = simulate_rir(room, source, array)
        expected_tap = round(16000 * 1.0 / 343.0)
        assert np.argmax(np.abs(rir.rir[0])) == expected_tap
        assert rir.rir[0, expected_tap] == pytest.approx(1.0 / (4 * np.pi), rel=1e-12)

    def test_equidistant_mics_same_delay(self):
        room = RoomConfig(dimensions=np.array([6.0, 5.0, 2.5]), rt60=0.0,
                          max_image_order=0)
        array = linear_array(num_mics=2, spacing=0.5, center=np.array([3.0, 2.0, 1.2]))
        source = np.array([3.0, 3.5, 1.2])  # on the perpendicular bisector
        rir = simulate_rir(room, source, array)
        assert np.argmax(np.abs(rir.rir[0])) == np.argmax(np.abs(rir.rir[1]))

    @pytest.mark.parametrize("rt60", [0.2, 0.45])
    def test_schroeder_decay_matches_requested_rt60(self, rt60):
        room = RoomConfig(dimensions=np.array([6.0, 5.0, 2.5]), rt60=rt60)
        array = linear_array(center=np.array([2.0, 2.0, 1.2]))
        rir = simulate_rir(room, np.array([4.0, 3.5, 1.5]), array)
        measured = schroeder_t60(rir.rir[0], 16000)
        assert abs(measured - rt60) <= 0.2 * rt60

    def test_causality(self):
        room = RoomConfig(dimensions=np.array([5.0, 4.0, 2.5]), rt60=0.3)
        array = linear_array(center=np.array([2.0, 2.0, 1.2]))
        source = np.array([3.0, 3.0, 1.5])
        rir = simulate_rir(room, source, array)
        for m in range(array.num_mics):
            direct = np.linalg.norm(source - array.mic_positions[m])
            first_tap = int(np.round(direct / 343.0 * 16000))
            assert np.all(rir.rir[m, :first_tap] == 0.0)

    def test_source_outside_room(self):
        room = RoomConfig(dimensions=np.array([4.0, 4.0, 2.0]), rt60=0.2)
        array = linear_array(center=np.array([2.0, 2.0, 1.0]))
        with pytest.raises(ValueError, match="outside"):
            simulate_rir(room, np.array([5.0, 1.0, 1.0]), array)

    def test_unreachable_rt60(self):
        room = RoomConfig(dimensions=np.array([8.0, 8.0, 2.5]), rt60=0.05)
        array = linear_array(center=np.array([4.0, 4.0, 1.0]))
        with pytest.raises(ValueError, match="unreachable"):
            simulate_rir(room, np.array([2.0, 2.0, 1.0]), array)

    def test_sinc_interp_peak_near_nearest(self):
        room = RoomConfig(dimensions=np.array([6.0, 5.0, 2.5]), rt60=0.0,
                          max_image_order=0)
        array = linear_array(center=np.array([2.0, 2.0, 1.2]))
        source = array.mic_positions[0] + np.array([0.0, 1.0, 0.0])
        rir = simulate_rir(room, source, array, interp="sinc")
        assert abs(np.argmax(np.abs(rir.rir[0])) - round(16000 / 343)) <= 1


class TestDoa:
    def test_endfire(self):
        array = linear_array(center=np.zeros(3))
        ahead_of_mic0 = array.mic_positions[0] - np.array([1.0, 0.0, 0.0])
        assert doa_of(ahead_of_mic0, array) == pytest.approx(0.0, abs=1e-9)

    def test_broadside(self):
        array = linear_array(center=np.zeros(3))
        assert doa_of(np.array([0.0, 2.0, 0.0]), array) == pytest.approx(90.0, abs=1e-9)

    def test_45_degrees(self):
        array = linear_array(center=np.zeros(3))
        source = np.array([-1.0, 1.0, 0.0]) * 3.0
        assert doa_of(source, array) == pytest.approx(45.0, abs=0.1)

    def test_non_colinear_rejected(self):
        geom = ArrayGeometry(
            mic_positions=np.array([[0, 0, 0], [0.03, 0, 0], [0.03, 0.03, 0]]),
            pairs=((0, 1),))
        with pytest.raises(ValueError, match="not linear"):
            doa_of(np.array([1.0, 1.0, 0.0]), geom)


class TestMixScene:
    def _components(self, seed=0):
        rng = np.random.default_rng(seed)
        room = RoomConfig(dimensions=np.array([5.0, 4.0, 2.2]), rt60=0.2)
        array = linear_array(center=np.array([2.0, 2.0, 1.1]))
        rir_t = simulate_rir(room, np.array([3.0, 3.0, 1.2]), array)
        rir_i = simulate_rir(room, np.array([1.0, 3.0, 1.2]), array)
        n = 16000
        target = synth_speech_like(rng, n)
        interf = synth_speech_like(rng, n)
        noise = MultichannelWave(samples=pink_noise(rng, 4, n) * 0.01)
        return target, interf, rir_t, rir_i, noise

    def test_snr_zero_gives_equal_powers(self):
        target, interf, rir_t, rir_i, noise = self._components()
        scene = mix_scene(target, interf, rir_t, rir_i, noise,
                          sir_db=3.0, snr_db=0.0)
        p_t = np.mean(scene.target_reverberant.samples[0] ** 2)
        p_n = np.mean(scene.noise.samples[0] ** 2)
        assert abs(10 * np.log10(p_t / p_n)) < 0.01

    def test_requested_sir_met_exactly(self):
        target, interf, rir_t, rir_i, noise = self._components(1)
        scene = mix_scene(target, interf, rir_t, rir_i, noise,
                          sir_db=-4.5, snr_db=10.0)
        p_t = np.mean(scene.target_reverberant.samples[0] ** 2)
        p_i = np.mean(scene.interference_reverberant.samples[0] ** 2)
        assert abs(10 * np.log10(p_t / p_i) - (-4.5)) < 0.01

    def test_zero_interference_is_error(self):
        target, _, rir_t, rir_i, noise = self._components(2)
        with pytest.raises(ValueError, match="silent"):
            mix_scene(target, np.zeros_like(target), rir_t, rir_i, noise,
                      sir_db=0.0, snr_db=0.0)

    def test_additivity_exact(self):
        target, interf, rir_t, rir_i, noise = self._components(3)
        scene = mix_scene(target, interf, rir_t, rir_i, noise,
                          sir_db=1.0, snr_db=5.0)
        total = (scene.target_reverberant.samples
                 + scene.interference_reverberant.samples
                 + scene.noise.samples)
        assert np.array_equal(total, scene.mixture.samples)


class TestGenerateScene:
    def test_deterministic(self):
        a = generate_scene(42)
        b = generate_scene(42)
        assert np.array_equal(a.mixture.samples, b.mixture.samples)
        assert np.array_equal(a.noise.samples, b.noise.samples)
        assert a.sir_db == b.sir_db

    def test_clip_length(self):
        assert generate_scene(0).mixture.num_samples == 64000

    def test_sampling_audit_small(self):
        cfg = SceneSimConfig()
        for seed in range(100):
            p = draw_scene_params(seed, cfg)
            dims = np.array(p.room_dims)
            assert np.all(dims >= np.array(cfg.room_min) - 1e-12)
            assert np.all(dims <= np.array(cfg.room_max) + 1e-12)
            assert cfg.rt60_range[0] <= p.rt60 <= cfg.rt60_range[1]
            assert abs(p.target_doa - p.interference_doa) >= 5.0
            assert cfg.sir_range_db[0] <= p.sir_db <= cfg.sir_range_db[1]
            assert cfg.snr_range_db[0] <= p.snr_db <= cfg.snr_range_db[1]

    def test_manifest_roundtrip(self, tmp_path):
        scene = generate_scene(5)
        manifest = save_scene(scene, str(tmp_path / "scene"))
        loaded = load_scene(manifest)
        assert loaded.seed == 5
        assert loaded.sir_db == pytest.approx(scene.sir_db)
        assert loaded.target_doa == pytest.approx(scene.target_doa)
        # float32 storage: readback within float32 resolution
        err = np.abs(loaded.target_reverberant.samples
                     - scene.target_reverberant.samples).max()
        assert err < 1e-6
        total = (loaded.target_reverberant.samples
                 + loaded.interference_reverberant.samples
                 + loaded.noise.samples)
        assert np.array_equal(total, loaded.mixture.samples)
