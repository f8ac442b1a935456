"""WAV file I/O and the STFT/ISTFT engine used by every other module.

Audio is floating point in [-1, 1] everywhere inside the library; integer
PCM exists only at file boundaries.  Spectrograms are one-sided complex
tensors laid out as [channels x frames x frequency bins].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

_WINDOW_KINDS = ("sqrt_hann", "hann", "rect")

# minimum overlap-add envelope value considered invertible
_ENV_FLOOR = 1e-10
# relative interior envelope ripple allowed by the COLA check
_COLA_RIPPLE = 1e-8


def make_window(kind: str, length: int) -> np.ndarray:
    """Analysis/synthesis taper of the given kind.

    "sqrt_hann" is the square-root Hann taper sampled on the half-sample
    grid (a sine window), so both endpoints are nonzero and the
    analysis*synthesis product overlap-adds to exactly 1 at 50% hop.
    """
    if kind == "sqrt_hann":
        return np.sin(np.pi * (np.arange(length) + 0.5) / length)
    if kind == "hann":
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(length) / length))
    if kind == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window kind {kind!r}, expected one of {_WINDOW_KINDS}")


def _cola_envelope(window: np.ndarray, hop: int, periods: int = 8) -> np.ndarray:
    """Overlap-add envelope of window**... (analysis*synthesis product)."""
    length = len(window)
    prod = window * window
    env = np.zeros(length * (periods + 1))
    for start in range(0, len(env) - length + 1, hop):
        env[start:start + length] += prod
    return env


def check_cola(window: np.ndarray, hop: int) -> bool:
    """True when analysis*synthesis overlap-adds to a constant in the interior."""
    length = len(window)
    env = _cola_envelope(window, hop)
    interior = env[length:-2 * length]
    if interior.size == 0 or interior.min() <= _ENV_FLOOR:
        return False
    ripple = (interior.max() - interior.min()) / interior.mean()
    return ripple < _COLA_RIPPLE


@dataclass(frozen=True)
class StftConfig:
    """Analysis/synthesis parameters.

    Defaults give 32 ms windows with 16 ms hop at 16 kHz.
    """

    window_len: int = 512
    hop: int = 256
    fft_size: int = 512
    window: str = "sqrt_hann"

    def __post_init__(self):
        if not (0 < self.hop <= self.window_len <= self.fft_size):
            raise ValueError(
                f"need 0 < hop <= window_len <= fft_size, got "
                f"hop={self.hop} window_len={self.window_len} fft_size={self.fft_size}"
            )
        if self.window not in _WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.window!r}")
        if not check_cola(self.taper(), self.hop):
            raise ValueError(
                f"window {self.window!r} does not satisfy constant overlap-add "
                f"at hop {self.hop} (window_len {self.window_len})"
            )

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1

    def taper(self) -> np.ndarray:
        return make_window(self.window, self.window_len)

    def num_frames(self, num_samples: int) -> int:
        if num_samples < self.window_len:
            raise ValueError(
                f"signal of {num_samples} samples is shorter than one "
                f"window ({self.window_len})"
            )
        return 1 + int(np.ceil((num_samples - self.window_len) / self.hop))

    def frequencies(self, sample_rate: float) -> np.ndarray:
        """Center frequency in Hz of each of the one-sided bins."""
        return np.arange(self.num_bins) * sample_rate / self.fft_size


@dataclass(frozen=True)
class MultichannelWave:
    """Time-domain multichannel audio, samples laid out [channels x time]."""

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[None, :]
        if samples.ndim != 2:
            raise ValueError(f"samples must be 1-D or 2-D, got shape {samples.shape}")
        if samples.shape[1] == 0:
            raise ValueError("zero-length audio")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def num_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def channel(self, index: int) -> np.ndarray:
        return self.samples[index]


@dataclass(frozen=True)
class Spectrogram:
    """One-sided complex STFT, bins laid out [channels x frames x freqs]."""

    bins: np.ndarray
    stft_config: StftConfig
    original_length: int
    sample_rate: int = 16000

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim == 2:
            bins = bins[None, :, :]
        if bins.ndim != 3:
            raise ValueError(f"bins must be 2-D or 3-D, got shape {bins.shape}")
        if bins.shape[2] != self.stft_config.num_bins:
            raise ValueError(
                f"got {bins.shape[2]} frequency bins, config implies "
                f"{self.stft_config.num_bins}"
            )
        if not np.all(np.isfinite(bins)):
            raise ValueError("spectrogram contains non-finite values")
        object.__setattr__(self, "bins", bins)

    @property
    def num_channels(self) -> int:
        return self.bins.shape[0]

    @property
    def num_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def num_bins(self) -> int:
        return self.bins.shape[2]

    def frequencies(self) -> np.ndarray:
        return self.stft_config.frequencies(self.sample_rate)


def read_wav(path: str | os.PathLike) -> MultichannelWave:
    """Read a RIFF WAV file (16-bit PCM or 32-bit float) into [-1, 1] floats."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise ValueError(f"cannot parse {path}: {exc}") from exc
    if data.size == 0:
        raise ValueError(f"{path}: zero-length audio")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32767.0
        np.clip(samples, -1.0, 1.0, out=samples)
    elif data.dtype == np.float32:
        samples = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise ValueError(
            f"{path}: unsupported encoding {data.dtype}, "
            "expected 16-bit PCM or 32-bit float"
        )
    if samples.ndim == 1:
        samples = samples[None, :]
    else:
        samples = samples.T  # wavfile gives [time x channels]
    return MultichannelWave(samples=samples, sample_rate=int(rate))


def write_wav(path: str | os.PathLike, wave: MultichannelWave,
              encoding: str = "float32") -> None:
    """Write a wave to disk.  Values outside [-1, 1] are an error, not clipped."""
    samples = wave.samples
    peak = np.max(np.abs(samples)) if samples.size else 0.0
    if peak > 1.0:
        raise ValueError(
            f"samples exceed [-1, 1] (peak {peak:.6g}); rescale before writing"
        )
    data = samples.T if wave.num_channels > 1 else samples[0]
    if encoding == "pcm16":
        wavfile.write(path, wave.sample_rate,
                      np.round(data * 32767.0).astype(np.int16))
    elif encoding == "float32":
        wavfile.write(path, wave.sample_rate, data.astype(np.float32))
    else:
        raise ValueError(f"unknown encoding {encoding!r}, expected pcm16 or float32")


def _frame(samples: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Zero-pad the tail and cut [channels x frames x window_len] frames."""
    num_frames = cfg.num_frames(samples.shape[1])
    padded_len = (num_frames - 1) * cfg.hop + cfg.window_len
    padded = np.zeros((samples.shape[0], padded_len))
    padded[:, :samples.shape[1]] = samples
    stride_ch, stride_t = padded.strides
    return np.lib.stride_tricks.as_strided(
        padded,
        shape=(samples.shape[0], num_frames, cfg.window_len),
        strides=(stride_ch, cfg.hop * stride_t, stride_t),
    )


def stft(wave: MultichannelWave, cfg: StftConfig | None = None) -> Spectrogram:
    """Windowed one-sided DFT per channel and frame.

    Frame count is 1 + ceil((len - window_len) / hop); the final frame is
    zero-padded.  Frames are not centered: frame t starts at sample t*hop.
    """
    cfg = cfg or StftConfig()
    frames = _frame(wave.samples, cfg)
    bins = np.fft.rfft(frames * cfg.taper(), n=cfg.fft_size, axis=-1)
    return Spectrogram(bins=bins, stft_config=cfg,
                       original_length=wave.num_samples,
                       sample_rate=wave.sample_rate)


def synthesis_envelope(cfg: StftConfig, num_frames: int) -> np.ndarray:
    """Per-sample sum of analysis*synthesis taper products over all frames."""
    window = cfg.taper()
    prod = window * window
    length = (num_frames - 1) * cfg.hop + cfg.window_len
    env = np.zeros(length)
    for t in range(num_frames):
        env[t * cfg.hop:t * cfg.hop + cfg.window_len] += prod
    return env


def istft(spec: Spectrogram, original_length: int | None = None) -> MultichannelWave:
    """Weighted overlap-add synthesis with the matched square-root taper.

    Exact inverse of :func:`stft` up to floating point rounding for any
    COLA-valid config; output truncated to ``original_length``.
    """
    cfg = spec.stft_config
    window = cfg.taper()
    if not check_cola(window, cfg.hop):
        raise ValueError(
            f"window {cfg.window!r} violates constant overlap-add at hop {cfg.hop}"
        )
    length = original_length if original_length is not None else spec.original_length
    num_frames = spec.num_frames
    frames = np.fft.irfft(spec.bins, n=cfg.fft_size, axis=-1)[..., :cfg.window_len]
    frames = frames * window
    padded_len = (num_frames - 1) * cfg.hop + cfg.window_len
    out = np.zeros((spec.num_channels, padded_len))
    for t in range(num_frames):
        out[:, t * cfg.hop:t * cfg.hop + cfg.window_len] += frames[:, t, :]
    env = synthesis_envelope(cfg, num_frames)
    good = env > _ENV_FLOOR
    out[:, good] /= env[good]
    out[:, ~good] = 0.0
    if length > padded_len:
        out = np.pad(out, ((0, 0), (0, length - padded_len)))
    return MultichannelWave(samples=out[:, :length], sample_rate=spec.sample_rate)
