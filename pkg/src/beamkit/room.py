"""Shoebox room impulse responses (image source method) and scene mixing.

A scene is a 4 s multichannel mixture of a reverberant target speaker, a
reverberant interfering speaker and background noise, with the components
stored separately so oracle masks and metrics have exact ground truth.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import fftconvolve

from .signal_io import MultichannelWave, read_wav, write_wav

_SABINE = 0.161  # Sabine constant for metric units, s/m
_MAX_ABSORPTION = 0.95
_IMAGE_CHUNK = 400_000
_SINC_HALF_WIDTH = 40


@dataclass(frozen=True)
class ArrayGeometry:
    """Microphone positions in meters plus the IPD pair list."""

    mic_positions: np.ndarray
    pairs: tuple = ((0, 1), (0, 2), (0, 3))
    reference_mic: int = 0

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.mic_positions, dtype=np.float64))
        if pos.shape[0] < 2 or pos.shape[1] != 3:
            raise ValueError(f"need >= 2 mics with 3-D coordinates, got {pos.shape}")
        if not (0 <= self.reference_mic < pos.shape[0]):
            raise ValueError(f"reference_mic {self.reference_mic} out of range")
        pairs = tuple(tuple(int(i) for i in p) for p in self.pairs)
        for i, j in pairs:
            if i == j or not (0 <= i < pos.shape[0]) or not (0 <= j < pos.shape[0]):
                raise ValueError(f"invalid mic pair ({i}, {j})")
        object.__setattr__(self, "mic_positions", pos)
        object.__setattr__(self, "pairs", pairs)

    @property
    def num_mics(self) -> int:
        return self.mic_positions.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        return self.mic_positions.mean(axis=0)

    def axis(self) -> np.ndarray:
        """Unit vector along a linear array, pointing with increasing mic index."""
        rel = self.mic_positions - self.mic_positions[0]
        lengths = np.linalg.norm(rel, axis=1)
        far = int(np.argmax(lengths))
        if lengths[far] < 1e-12:
            raise ValueError("degenerate array: all mics at the same position")
        axis = rel[far] / lengths[far]
        residual = rel - np.outer(rel @ axis, axis)
        if np.max(np.linalg.norm(residual, axis=1)) > 1e-9:
            raise ValueError("array is not linear (mics are not colinear)")
        return axis

    def axial_coordinates(self) -> np.ndarray:
        """Signed position of each mic along the axis, relative to the reference."""
        axis = self.axis()
        rel = self.mic_positions - self.mic_positions[self.reference_mic]
        return rel @ axis

    def pair_spacings(self) -> np.ndarray:
        """Signed axial displacement x_j - x_i per IPD pair (i, j), meters."""
        coords = self.axial_coordinates()
        return np.array([coords[j] - coords[i] for i, j in self.pairs])


def linear_array(num_mics: int = 4, spacing: float = 0.03,
                 pairs: tuple | None = None,
                 center: np.ndarray | None = None,
                 azimuth_deg: float = 0.0) -> ArrayGeometry:
    """Uniform linear array in the horizontal plane.

    Defaults to four mics at 3 cm spacing with pairs (0,1), (0,2), (0,3).
    """
    if pairs is None:
        pairs = tuple((0, m) for m in range(1, num_mics))
    direction = np.array([np.cos(np.radians(azimuth_deg)),
                          np.sin(np.radians(azimuth_deg)), 0.0])
    offsets = (np.arange(num_mics) - (num_mics - 1) / 2.0) * spacing
    center = np.zeros(3) if center is None else np.asarray(center, dtype=np.float64)
    positions = center[None, :] + offsets[:, None] * direction[None, :]
    return ArrayGeometry(mic_positions=positions, pairs=pairs)


@dataclass(frozen=True)
class RoomConfig:
    """Shoebox room with uniform wall absorption derived from rt60."""

    dimensions: np.ndarray
    rt60: float
    max_image_order: int = 30
    speed_of_sound: float = 343.0
    sample_rate: int = 16000

    def __post_init__(self):
        dims = np.asarray(self.dimensions, dtype=np.float64)
        if dims.shape != (3,) or np.any(dims <= 0):
            raise ValueError(f"dimensions must be 3 positive lengths, got {dims}")
        if self.rt60 < 0:
            raise ValueError(f"rt60 must be >= 0, got {self.rt60}")
        if self.max_image_order < 0:
            raise ValueError("max_image_order must be >= 0")
        object.__setattr__(self, "dimensions", dims)

    @property
    def volume(self) -> float:
        return float(np.prod(self.dimensions))

    @property
    def surface_area(self) -> float:
        L, W, H = self.dimensions
        return 2.0 * (L * W + L * H + W * H)

    def absorption(self) -> float:
        """Uniform Sabine absorption coefficient for the requested rt60."""
        if self.rt60 == 0:
            return 1.0
        alpha = _SABINE * self.volume / (self.surface_area * self.rt60)
        if alpha > 1.0:
            raise ValueError(
                f"rt60 {self.rt60:.3f} s unreachable for this geometry "
                f"(Sabine absorption {alpha:.3f} > 1)"
            )
        return alpha

    def min_feasible_rt60(self, max_absorption: float = _MAX_ABSORPTION) -> float:
        return _SABINE * self.volume / (self.surface_area * max_absorption)


@dataclass(frozen=True)
class ImpulseResponseSet:
    """Room impulse responses, one row per microphone."""

    rir: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        rir = np.atleast_2d(np.asarray(self.rir, dtype=np.float64))
        if not np.all(np.isfinite(rir)):
            raise ValueError("RIR contains non-finite values")
        object.__setattr__(self, "rir", rir)

    @property
    def num_mics(self) -> int:
        return self.rir.shape[0]

    @property
    def num_taps(self) -> int:
        return self.rir.shape[1]


def _inside(point: np.ndarray, dims: np.ndarray, margin: float = 1e-9) -> bool:
    return bool(np.all(point > margin) and np.all(point < dims - margin))


def simulate_rir(room: RoomConfig, source_pos: np.ndarray, array: ArrayGeometry,
                 interp: str = "nearest") -> ImpulseResponseSet:
    """Image-source RIR from a point source to every array mic.

    Each image contributes beta**bounces / (4 pi r) at delay r/c, with beta
    the uniform wall reflection coefficient.  ``interp`` selects nearest-sample
    placement (deterministic default) or an 81-tap windowed-sinc fractional
    delay.
    """
    source = np.asarray(source_pos, dtype=np.float64)
    dims = room.dimensions
    if not _inside(source, dims):
        raise ValueError(f"source {source} outside room {dims}")
    for m in range(array.num_mics):
        if not _inside(array.mic_positions[m], dims):
            raise ValueError(f"mic {m} at {array.mic_positions[m]} outside room")
    if interp not in ("nearest", "sinc"):
        raise ValueError(f"unknown interpolation {interp!r}")

    fs = room.sample_rate
    c = room.speed_of_sound
    alpha = room.absorption()
    beta = np.sqrt(max(0.0, 1.0 - alpha))

    direct = np.linalg.norm(array.mic_positions - source[None, :], axis=1)
    num_taps = int(np.ceil(room.rt60 * fs)) + int(np.ceil(direct.max() / c * fs)) + 64
    horizon = num_taps / fs * c  # images beyond this distance fall off the RIR

    if beta == 0.0 or room.max_image_order == 0:
        orders = np.zeros(3, dtype=int)
    else:
        orders = np.minimum(np.ceil(horizon / (2.0 * dims)).astype(int),
                            room.max_image_order)

    grids = [np.arange(-n, n + 1) for n in orders]
    rx, ry, rz = np.meshgrid(*grids, indexing="ij")
    rvecs = np.stack([rx.ravel(), ry.ravel(), rz.ravel()], axis=1)

    h = np.zeros((array.num_mics, num_taps))
    mics = array.mic_positions
    for px in (0, 1):
        for py in (0, 1):
            for pz in (0, 1):
                p = np.array([px, py, pz])
                for start in range(0, rvecs.shape[0], _IMAGE_CHUNK):
                    r = rvecs[start:start + _IMAGE_CHUNK]
                    img = (1 - 2 * p)[None, :] * source[None, :] + 2.0 * r * dims[None, :]
                    bounces = np.abs(r - p[None, :]).sum(axis=1) + np.abs(r).sum(axis=1)
                    gain = beta ** bounces
                    for m in range(array.num_mics):
                        d = np.linalg.norm(img - mics[m][None, :], axis=1)
                        amp = gain / (4.0 * np.pi * d)
                        delay = d / c * fs
                        if interp == "nearest":
                            idx = np.round(delay).astype(np.int64)
                            ok = idx < num_taps
                            np.add.at(h[m], idx[ok], amp[ok])
                        else:
                            _add_sinc(h[m], delay, amp, fs)
    return ImpulseResponseSet(rir=h, sample_rate=fs)


def _add_sinc(out: np.ndarray, delay: np.ndarray, amp: np.ndarray, fs: int) -> None:
    """Accumulate Hann-windowed sinc pulses at fractional delays."""
    width = 2 * _SINC_HALF_WIDTH + 1
    base = np.floor(delay).astype(np.int64)
    offsets = np.arange(-_SINC_HALF_WIDTH, _SINC_HALF_WIDTH + 1)
    idx = base[:, None] + offsets[None, :]
    t = idx - delay[:, None]
    taper = 0.5 * (1.0 + np.cos(np.pi * t / (_SINC_HALF_WIDTH + 1)))
    pulse = amp[:, None] * np.sinc(t) * taper
    ok = (idx >= 0) & (idx < out.size)
    np.add.at(out, idx[ok], pulse[ok])


def doa_of(source_pos: np.ndarray, array: ArrayGeometry) -> float:
    """Angle in degrees between the array axis and the incoming propagation
    direction (source toward array centroid); 0 is endfire past mic 0,
    90 is broadside."""
    axis = array.axis()
    direction = array.centroid - np.asarray(source_pos, dtype=np.float64)
    norm = np.linalg.norm(direction)
    if norm < 1e-12:
        raise ValueError("source coincides with the array centroid")
    cos_theta = np.clip(axis @ direction / norm, -1.0, 1.0)
    return float(np.degrees(np.arccos(cos_theta)))


@dataclass(frozen=True)
class MixtureScene:
    """A mixture and its separately stored components.

    ``mixture`` is bit-exactly the sample-wise sum of the three components.
    """

    mixture: MultichannelWave
    target_reverberant: MultichannelWave
    interference_reverberant: MultichannelWave
    noise: MultichannelWave
    target_doa: float = float("nan")
    interference_doa: float = float("nan")
    sir_db: float = float("nan")
    snr_db: float = float("nan")
    seed: int | None = None
    room: RoomConfig | None = None
    array: ArrayGeometry | None = None

    def __post_init__(self):
        shapes = {w.samples.shape for w in (self.mixture, self.target_reverberant,
                                            self.interference_reverberant, self.noise)}
        if len(shapes) != 1:
            raise ValueError(f"component shapes differ: {shapes}")
        total = (self.target_reverberant.samples
                 + self.interference_reverberant.samples + self.noise.samples)
        if not np.array_equal(total, self.mixture.samples):
            raise ValueError("mixture is not the exact sum of its components")

    @property
    def sample_rate(self) -> int:
        return self.mixture.sample_rate


def _as_mono(signal) -> np.ndarray:
    if isinstance(signal, MultichannelWave):
        if signal.num_channels != 1:
            raise ValueError("dry sources must be mono")
        return signal.samples[0]
    arr = np.asarray(signal, dtype=np.float64)
    if arr.ndim == 2:
        if arr.shape[0] != 1:
            raise ValueError("dry sources must be mono")
        arr = arr[0]
    return arr


def _convolve_rir(dry: np.ndarray, rirs: ImpulseResponseSet, length: int) -> np.ndarray:
    out = fftconvolve(dry[None, :], rirs.rir, axes=1)
    return out[:, :length]


def mix_scene(target_dry, interf_dry, rir_target: ImpulseResponseSet,
              rir_interf: ImpulseResponseSet, noise: MultichannelWave,
              sir_db: float, snr_db: float, reference_mic: int = 0,
              sample_rate: int = 16000, peak_limit: float = 0.9,
              **metadata) -> MixtureScene:
    """Convolve dry sources with their RIRs and mix at the requested SIR/SNR.

    SIR/SNR are defined as power ratios against the reverberant target at
    the reference mic.  All components share one overall gain so that the
    mixture peak stays below ``peak_limit``; ratios are unaffected.
    """
    target = _as_mono(target_dry)
    interf = _as_mono(interf_dry)
    length = len(target)
    if len(interf) != length or noise.num_samples != length:
        raise ValueError("target, interference and noise must share one length")

    x_rev = _convolve_rir(target, rir_target, length)
    n_rev = _convolve_rir(interf, rir_interf, length)

    p_target = np.mean(x_rev[reference_mic] ** 2)
    p_interf = np.mean(n_rev[reference_mic] ** 2)
    p_noise = np.mean(noise.samples[reference_mic] ** 2)
    if p_target <= 0.0:
        raise ValueError("target source is silent; SIR/SNR scaling undefined")
    if p_interf <= 0.0:
        raise ValueError("interference source is silent; SIR scaling undefined")
    if p_noise <= 0.0:
        raise ValueError("noise is silent; SNR scaling undefined")

    n_rev = n_rev * np.sqrt(p_target / p_interf * 10.0 ** (-sir_db / 10.0))
    s = noise.samples * np.sqrt(p_target / p_noise * 10.0 ** (-snr_db / 10.0))

    peak = np.max(np.abs(x_rev + n_rev + s))
    if peak > peak_limit:
        gain = peak_limit / peak
        x_rev = x_rev * gain
        n_rev = n_rev * gain
        s = s * gain

    mk = lambda a: MultichannelWave(samples=a, sample_rate=sample_rate)
    return MixtureScene(
        mixture=mk(x_rev + n_rev + s),
        target_reverberant=mk(x_rev),
        interference_reverberant=mk(n_rev),
        noise=mk(s),
        sir_db=sir_db,
        snr_db=snr_db,
        **metadata,
    )


def pink_noise(rng: np.random.Generator, channels: int, num_samples: int,
               sample_rate: int = 16000, band: tuple | None = None) -> np.ndarray:
    """Independent 1/f-shaped noise per channel, unit RMS.

    With ``band=(f_lo, f_hi)`` the 1/f slope holds inside the band and
    fourth-order rolloffs apply outside, which keeps the energy where a
    small-aperture array can actually resolve directions.
    """
    white = rng.standard_normal((channels, num_samples))
    spec = np.fft.rfft(white, axis=1)
    freqs = np.arange(spec.shape[1]) * sample_rate / num_samples
    fsafe = np.maximum(freqs, 1.0)
    if band is None:
        shape = 1.0 / np.sqrt(fsafe)
    else:
        f_lo, f_hi = band
        shape = 1.0 / np.sqrt(np.maximum(fsafe, f_lo))
        shape *= 1.0 / (1.0 + (f_lo / fsafe) ** 4)
        shape *= 1.0 / (1.0 + (fsafe / f_hi) ** 4)
    spec *= shape
    spec[:, 0] = 0.0
    out = np.fft.irfft(spec, n=num_samples, axis=1)
    rms = np.sqrt(np.mean(out ** 2, axis=1, keepdims=True))
    return out / rms


def synth_speech_like(rng: np.random.Generator, num_samples: int,
                      sample_rate: int = 16000, p_voiced: float = 0.40,
                      p_fricative: float = 0.18) -> np.ndarray:
    """Speech-like dry source: harmonic stacks with drifting pitch,
    fricative noise bursts and silent gaps, peak-normalized to 0.5.

    Stands in for a dry recording; the pause structure gives masks the
    time-frequency sparsity that real speech has.
    """
    steps = rng.standard_normal(num_samples) * 0.5
    kernel = np.exp(-np.arange(2048) / 384.0)
    drift = np.convolve(steps, kernel)[:num_samples]
    f0 = np.clip(rng.uniform(100.0, 250.0) + drift, 80.0, 330.0)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate

    voiced = np.zeros(num_samples)
    t = np.arange(num_samples)
    for k in range(1, 13):
        amp = (0.5 + rng.uniform()) / k
        tremolo = 1.0 + 0.3 * np.sin(
            2.0 * np.pi * rng.uniform(2.0, 6.0) * t / sample_rate
            + rng.uniform(0.0, 2.0 * np.pi))
        voiced += (amp * np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi))
                   * (k * f0 < 0.45 * sample_rate) * tremolo)

    fricative = np.diff(rng.standard_normal(num_samples), prepend=0.0)
    out = np.zeros(num_samples)
    pos = 0
    while pos < num_samples:
        seg = min(int(sample_rate * rng.uniform(0.08, 0.45)), num_samples - pos)
        kind = rng.uniform()
        if kind < p_voiced:
            out[pos:pos + seg] = voiced[pos:pos + seg]
        elif kind < p_voiced + p_fricative:
            out[pos:pos + seg] = 0.3 * fricative[pos:pos + seg]
        pos += seg

    smooth = np.hanning(int(sample_rate * 0.02) + 2)
    envelope = np.convolve((np.abs(out) > 1e-9).astype(np.float64),
                           smooth / smooth.sum(), mode="same")
    out = out * envelope + rng.standard_normal(num_samples) * 1e-4
    return out * (0.5 / np.max(np.abs(out)))


@dataclass(frozen=True)
class SceneSimConfig:
    """Sampling ranges and fixed geometry for generated scenes.

    Talkers sit in a 0.5-1.5 m shell around the array (meeting/in-car
    distances); the background noise is a localized source farther out plus
    a -60 dB spatially-white sensor floor.
    """

    room_min: tuple = (3.0, 3.0, 1.5)
    room_max: tuple = (8.0, 8.0, 2.5)
    rt60_range: tuple = (0.1, 0.6)
    sir_range_db: tuple = (-6.0, 6.0)
    snr_range_db: tuple = (-5.0, 20.0)
    duration: float = 4.0
    sample_rate: int = 16000
    min_angle_separation_deg: float = 5.0
    num_mics: int = 4
    mic_spacing: float = 0.03
    pairs: tuple = ((0, 1), (0, 2), (0, 3))
    max_image_order: int = 30
    speed_of_sound: float = 343.0
    rir_interp: str = "nearest"
    wall_margin: float = 0.4
    source_distance: tuple = (0.5, 1.5)
    noise_distance: tuple = (0.8, 3.0)
    source_elevation_rad: float = 0.3
    noise_band_hz: tuple = (150.0, 6000.0)
    sensor_floor_db: float = -60.0
    max_placement_retries: int = 200
    speech_dir: str | None = None
    noise_dir: str | None = None

    @property
    def num_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


@dataclass(frozen=True)
class SceneParams:
    """Everything random about one scene, drawn before any signal synthesis."""

    seed: int
    room_dims: tuple
    rt60: float
    array_center: tuple
    array_azimuth_deg: float
    target_pos: tuple
    interference_pos: tuple
    noise_pos: tuple
    target_doa: float
    interference_doa: float
    sir_db: float
    snr_db: float


def draw_scene_params(seed: int, cfg: SceneSimConfig) -> SceneParams:
    """Deterministically sample one scene's geometry and mixing levels."""
    rng = np.random.default_rng(seed)
    span = np.asarray(cfg.room_max) - np.asarray(cfg.room_min)
    dims = np.asarray(cfg.room_min) + rng.uniform(size=3) * span

    probe = RoomConfig(dimensions=dims, rt60=cfg.rt60_range[1])
    rt_lo = max(cfg.rt60_range[0], probe.min_feasible_rt60())
    rt60 = rt_lo + rng.uniform() * (cfg.rt60_range[1] - rt_lo)

    margin = cfg.wall_margin
    center = margin + rng.uniform(size=3) * (dims - 2 * margin)
    azimuth = rng.uniform() * 360.0
    array = linear_array(cfg.num_mics, cfg.mic_spacing, cfg.pairs,
                         center=center, azimuth_deg=azimuth)

    def draw_shell(lo, hi):
        for _ in range(cfg.max_placement_retries):
            dist = lo + rng.uniform() * (hi - lo)
            az = rng.uniform() * 2.0 * np.pi
            el = rng.uniform(-cfg.source_elevation_rad, cfg.source_elevation_rad)
            pos = center + dist * np.array([np.cos(az) * np.cos(el),
                                            np.sin(az) * np.cos(el),
                                            np.sin(el)])
            if np.all(pos > margin) and np.all(pos < dims - margin):
                return pos
        raise RuntimeError(f"seed {seed}: source placement failed after "
                           f"{cfg.max_placement_retries} retries")

    target_pos = draw_shell(*cfg.source_distance)
    target_doa = doa_of(target_pos, array)
    for _ in range(cfg.max_placement_retries):
        interference_pos = draw_shell(*cfg.source_distance)
        interference_doa = doa_of(interference_pos, array)
        if abs(interference_doa - target_doa) >= cfg.min_angle_separation_deg:
            break
    else:
        raise RuntimeError(f"seed {seed}: could not separate sources by "
                           f"{cfg.min_angle_separation_deg} degrees")

    sir = cfg.sir_range_db[0] + rng.uniform() * (cfg.sir_range_db[1] - cfg.sir_range_db[0])
    snr = cfg.snr_range_db[0] + rng.uniform() * (cfg.snr_range_db[1] - cfg.snr_range_db[0])
    noise_pos = draw_shell(*cfg.noise_distance)
    return SceneParams(
        seed=seed,
        room_dims=tuple(dims),
        rt60=float(rt60),
        array_center=tuple(center),
        array_azimuth_deg=float(azimuth),
        target_pos=tuple(target_pos),
        interference_pos=tuple(interference_pos),
        noise_pos=tuple(noise_pos),
        target_doa=float(target_doa),
        interference_doa=float(interference_doa),
        sir_db=float(sir),
        snr_db=float(snr),
    )


def _list_wavs(directory: str) -> list:
    names = sorted(f for f in os.listdir(directory) if f.lower().endswith(".wav"))
    if not names:
        raise ValueError(f"no WAV files in {directory}")
    return [os.path.join(directory, f) for f in names]


def _corpus_clip(rng, directory, num_samples) -> np.ndarray:
    """Random fixed-length mono clip from a directory of WAV files."""
    paths = _list_wavs(directory)
    wav = read_wav(paths[int(rng.integers(0, len(paths)))])
    mono = wav.samples[0]
    if len(mono) < num_samples:
        reps = int(np.ceil(num_samples / len(mono)))
        mono = np.tile(mono, reps)
    start = int(rng.integers(0, len(mono) - num_samples + 1))
    return mono[start:start + num_samples]


def generate_scene(seed: int, cfg: SceneSimConfig | None = None) -> MixtureScene:
    """Deterministic scene synthesis: geometry draw, RIRs, sources, mixing.

    The background noise is a band-limited pink point source convolved with
    its own RIR, plus a spatially-white sensor floor well below the target.
    """
    cfg = cfg or SceneSimConfig()
    params = draw_scene_params(seed, cfg)
    rng = np.random.default_rng((seed, 0xA5CE))

    room = RoomConfig(dimensions=np.asarray(params.room_dims), rt60=params.rt60,
                      max_image_order=cfg.max_image_order,
                      speed_of_sound=cfg.speed_of_sound,
                      sample_rate=cfg.sample_rate)
    array = linear_array(cfg.num_mics, cfg.mic_spacing, cfg.pairs,
                         center=np.asarray(params.array_center),
                         azimuth_deg=params.array_azimuth_deg)

    rir_target = simulate_rir(room, np.asarray(params.target_pos), array,
                              interp=cfg.rir_interp)
    rir_interf = simulate_rir(room, np.asarray(params.interference_pos), array,
                              interp=cfg.rir_interp)
    rir_noise = simulate_rir(room, np.asarray(params.noise_pos), array,
                             interp=cfg.rir_interp)

    n = cfg.num_samples
    if cfg.speech_dir:
        target_dry = _corpus_clip(rng, cfg.speech_dir, n)
        interf_dry = _corpus_clip(rng, cfg.speech_dir, n)
    else:
        target_dry = synth_speech_like(rng, n, cfg.sample_rate)
        interf_dry = synth_speech_like(rng, n, cfg.sample_rate)

    if cfg.noise_dir:
        noise_dry = _corpus_clip(rng, cfg.noise_dir, n)
    else:
        noise_dry = pink_noise(rng, 1, n, cfg.sample_rate, band=cfg.noise_band_hz)[0]
    noise_samples = _convolve_rir(noise_dry, rir_noise, n)
    floor = pink_noise(rng, cfg.num_mics, n, cfg.sample_rate, band=cfg.noise_band_hz)
    target_rms = np.sqrt(np.mean(_convolve_rir(target_dry, rir_target, n)[0] ** 2))
    noise_samples = noise_samples + floor * 10.0 ** (cfg.sensor_floor_db / 20.0) * target_rms
    noise = MultichannelWave(samples=noise_samples, sample_rate=cfg.sample_rate)

    return mix_scene(
        target_dry, interf_dry, rir_target, rir_interf, noise,
        sir_db=params.sir_db, snr_db=params.snr_db,
        reference_mic=array.reference_mic, sample_rate=cfg.sample_rate,
        target_doa=params.target_doa, interference_doa=params.interference_doa,
        seed=seed, room=room, array=array,
    )


_SCENE_FILES = {
    "mixture": "mixture.wav",
    "target_reverberant": "target.wav",
    "interference_reverberant": "interference.wav",
    "noise": "noise.wav",
}


def save_scene(scene: MixtureScene, directory: str) -> str:
    """Write component WAVs (32-bit float) plus manifest.json; returns the
    manifest path."""
    os.makedirs(directory, exist_ok=True)
    for attr, name in _SCENE_FILES.items():
        write_wav(os.path.join(directory, name), getattr(scene, attr),
                  encoding="float32")
    manifest = {
        "seed": scene.seed,
        "sample_rate": scene.sample_rate,
        "num_samples": scene.mixture.num_samples,
        "target_doa": scene.target_doa,
        "interference_doa": scene.interference_doa,
        "sir_db": scene.sir_db,
        "snr_db": scene.snr_db,
        "files": dict(zip(_SCENE_FILES.keys(), _SCENE_FILES.values())),
    }
    if scene.room is not None:
        manifest["room"] = {
            "dimensions": scene.room.dimensions.tolist(),
            "rt60": scene.room.rt60,
            "speed_of_sound": scene.room.speed_of_sound,
        }
    if scene.array is not None:
        manifest["array"] = {
            "mic_positions": scene.array.mic_positions.tolist(),
            "pairs": [list(p) for p in scene.array.pairs],
            "reference_mic": scene.array.reference_mic,
        }
    path = os.path.join(directory, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_scene(manifest_path: str) -> MixtureScene:
    """Rebuild a scene from a manifest written by :func:`save_scene`.

    File storage is 32-bit float, so components are float32-quantized; the
    mixture is recomputed as their sum to keep the additivity invariant.
    """
    with open(manifest_path) as f:
        manifest = json.load(f)
    base = os.path.dirname(manifest_path)
    waves = {attr: read_wav(os.path.join(base, manifest["files"][attr]))
             for attr in _SCENE_FILES if attr != "mixture"}
    components = (waves["target_reverberant"], waves["interference_reverberant"],
                  waves["noise"])
    mixture = MultichannelWave(
        samples=sum(w.samples for w in components),
        sample_rate=manifest["sample_rate"],
    )
    array = None
    if "array" in manifest:
        array = ArrayGeometry(
            mic_positions=np.asarray(manifest["array"]["mic_positions"]),
            pairs=tuple(tuple(p) for p in manifest["array"]["pairs"]),
            reference_mic=manifest["array"]["reference_mic"],
        )
    room = None
    if "room" in manifest:
        room = RoomConfig(dimensions=np.asarray(manifest["room"]["dimensions"]),
                          rt60=manifest["room"]["rt60"],
                          speed_of_sound=manifest["room"]["speed_of_sound"],
                          sample_rate=manifest["sample_rate"])
    return MixtureScene(
        mixture=mixture,
        target_reverberant=waves["target_reverberant"],
        interference_reverberant=waves["interference_reverberant"],
        noise=waves["noise"],
        target_doa=manifest.get("target_doa", float("nan")),
        interference_doa=manifest.get("interference_doa", float("nan")),
        sir_db=manifest.get("sir_db", float("nan")),
        snr_db=manifest.get("snr_db", float("nan")),
        seed=manifest.get("seed"),
        room=room,
        array=array,
    )
