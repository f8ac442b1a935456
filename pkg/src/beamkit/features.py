"""Input features for the separation networks: reference magnitude,
cosine inter-channel phase differences, and the target angle feature.

All features are phase- or magnitude-derived maps over [freq x frames];
the stacked layout is [magnitude, cosIPD per pair, angle feature] along a
leading plane axis, so a 4-mic array with 3 pairs yields 5 planes.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .room import ArrayGeometry
from .signal_io import Spectrogram


@dataclass(frozen=True)
class FeatureStack:
    """Stacked real input features, data laid out [planes x freq x frames]."""

    data: np.ndarray
    pairs: tuple = ()
    target_doa: float = float("nan")

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError(f"feature stack must be 3-D, got {data.shape}")
        if self.pairs and data.shape[0] != len(self.pairs) + 2:
            raise ValueError(
                f"{data.shape[0]} planes inconsistent with {len(self.pairs)} pairs"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("feature stack contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def num_planes(self) -> int:
        return self.data.shape[0]

    @property
    def plane_names(self) -> list:
        names = ["magnitude"]
        names += [f"cos_ipd_{i}_{j}" for i, j in self.pairs]
        names.append("angle_feature")
        return names

    @property
    def magnitude(self) -> np.ndarray:
        return self.data[0]

    @property
    def cos_ipd_planes(self) -> np.ndarray:
        return self.data[1:-1]

    @property
    def angle_feature_plane(self) -> np.ndarray:
        return self.data[-1]


def magnitude_ref(spec: Spectrogram, reference_mic: int = 0) -> np.ndarray:
    """Magnitude of the reference channel, [freq x frames]."""
    if not (0 <= reference_mic < spec.num_channels):
        raise ValueError(f"reference mic {reference_mic} out of range")
    return np.abs(spec.bins[reference_mic]).T


def _unit_phasors(spec: Spectrogram, pairs) -> np.ndarray:
    """exp(j * IPD) per pair as [pairs x freq x frames]; zero bins get phase 0."""
    bins = spec.bins  # [M x T x F]
    for i, j in pairs:
        if not (0 <= i < spec.num_channels and 0 <= j < spec.num_channels):
            raise ValueError(f"pair ({i}, {j}) out of range for {spec.num_channels} channels")
    out = np.empty((len(pairs), spec.num_bins, spec.num_frames), dtype=np.complex128)
    for p, (i, j) in enumerate(pairs):
        prod = bins[i] * np.conj(bins[j])
        mag = np.abs(prod)
        phasor = np.where(mag > 0.0, prod / np.where(mag > 0.0, mag, 1.0), 1.0 + 0.0j)
        # a zero bin on one side only: fall back to the other side's phase
        zi = np.abs(bins[i]) == 0.0
        zj = np.abs(bins[j]) == 0.0
        if zi.any() or zj.any():
            phi = np.where(np.abs(bins[i]) > 0, np.angle(bins[i]), 0.0)
            phj = np.where(np.abs(bins[j]) > 0, np.angle(bins[j]), 0.0)
            phasor = np.where(zi | zj, np.exp(1j * (phi - phj)), phasor)
        out[p] = phasor.T
    return out


def cos_ipd(spec: Spectrogram, pairs) -> np.ndarray:
    """cos of the inter-channel phase difference per pair, [pairs x freq x frames].

    Bins where either channel is exactly zero emit 1.0.
    """
    pairs = tuple(tuple(p) for p in pairs)
    phasors = _unit_phasors(spec, pairs)
    out = phasors.real.copy()
    bins = spec.bins
    for p, (i, j) in enumerate(pairs):
        either_zero = (np.abs(bins[i]) == 0.0) | (np.abs(bins[j]) == 0.0)
        out[p][either_zero.T] = 1.0
    return out


def angle_feature(spec: Spectrogram, pairs, theta_deg: float,
                  array: ArrayGeometry, speed_of_sound: float = 343.0) -> np.ndarray:
    """Cosine similarity between observed IPDs and the steering phase of a
    source at ``theta_deg``, averaged over pairs; [freq x frames].

    Near 1 on bins dominated by a source at the target angle, near 0 for
    phase-random content.
    """
    if not (0.0 <= theta_deg <= 180.0):
        raise ValueError(f"theta must be in [0, 180] degrees, got {theta_deg}")
    pairs = tuple(tuple(p) for p in pairs)
    spacings = ArrayGeometry(array.mic_positions, pairs,
                             array.reference_mic).pair_spacings()
    freqs = spec.frequencies()
    cos_theta = np.cos(np.radians(theta_deg))
    phasors = _unit_phasors(spec, pairs)  # [P x F x T]
    # cos(IPD - s) = cos(IPD) cos(s) + sin(IPD) sin(s)
    steer = 2.0 * np.pi * freqs[None, :] * spacings[:, None] * cos_theta / speed_of_sound
    af = (phasors.real * np.cos(steer)[:, :, None]
          + phasors.imag * np.sin(steer)[:, :, None])
    return af.mean(axis=0)


def stack_features(magnitude: np.ndarray, cos_ipd_planes: np.ndarray,
                   af: np.ndarray, pairs: tuple = (),
                   target_doa: float = float("nan")) -> FeatureStack:
    """Stack [magnitude, cosIPD..., angle feature] along the plane axis."""
    magnitude = np.asarray(magnitude, dtype=np.float64)
    cos_ipd_planes = np.asarray(cos_ipd_planes, dtype=np.float64)
    af = np.asarray(af, dtype=np.float64)
    if magnitude.ndim != 2 or af.ndim != 2 or cos_ipd_planes.ndim != 3:
        raise ValueError("expected magnitude/af as 2-D and cosIPD as 3-D")
    if not (magnitude.shape == af.shape == cos_ipd_planes.shape[1:]):
        raise ValueError(
            f"plane shapes disagree: magnitude {magnitude.shape}, "
            f"cosIPD {cos_ipd_planes.shape}, af {af.shape}"
        )
    data = np.concatenate([magnitude[None], cos_ipd_planes, af[None]], axis=0)
    return FeatureStack(data=data, pairs=tuple(tuple(p) for p in pairs),
                        target_doa=target_doa)


def compute_feature_stack(spec: Spectrogram, array: ArrayGeometry,
                          theta_deg: float,
                          speed_of_sound: float = 343.0) -> FeatureStack:
    """Full feature stack for one spectrogram and target direction."""
    mag = magnitude_ref(spec, array.reference_mic)
    ipd = cos_ipd(spec, array.pairs)
    af = angle_feature(spec, array.pairs, theta_deg, array, speed_of_sound)
    return stack_features(mag, ipd, af, pairs=array.pairs, target_doa=theta_deg)


_MAGIC = b"BKT1"


def save_tensor(path: str | os.PathLike, array: np.ndarray,
                plane_names: list | None = None) -> None:
    """Dump a tensor as a small JSON header plus flat binary payload."""
    array = np.ascontiguousarray(array)
    header = {
        "shape": list(array.shape),
        "dtype": array.dtype.str,
        "planes": plane_names or [],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(array.tobytes())


def load_tensor(path: str | os.PathLike):
    """Read back a tensor dump; returns (array, header dict)."""
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a tensor dump")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode())
        data = np.frombuffer(f.read(), dtype=np.dtype(header["dtype"]))
    return data.reshape(header["shape"]).copy(), header
