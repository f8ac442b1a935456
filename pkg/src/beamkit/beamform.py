"""Classical beamforming: steering vectors, PCA steering estimation, the
closed-form MVDR solve with diagonal loading, and beam-pattern analysis.

Weights follow the w^H y convention: the distortionless constraint is
w^H alpha = 1 and beamforming is an inner product per (frame, frequency).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .masks import CovarianceField
from .room import ArrayGeometry
from .signal_io import Spectrogram

DEFAULT_LOADING = 1e-6
_DEGENERACY_GAP = 1e-9


@dataclass(frozen=True)
class SteeringVector:
    """Plane-wave phases per frequency, [freq x mics]; reference element 1."""

    values: np.ndarray
    theta_deg: float
    frequencies: np.ndarray

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.complex128))
        freqs = np.atleast_1d(np.asarray(self.frequencies, dtype=np.float64))
        if values.shape[0] != freqs.shape[0]:
            raise ValueError(
                f"{values.shape[0]} steering rows vs {freqs.shape[0]} frequencies"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frequencies", freqs)


@dataclass(frozen=True)
class SteeringResult:
    """PCA-estimated steering per frequency plus degeneracy warnings."""

    vectors: np.ndarray
    degenerate: np.ndarray

    @property
    def any_degenerate(self) -> bool:
        return bool(self.degenerate.any())


@dataclass(frozen=True)
class BeamWeights:
    """Complex beamforming weights, [freq x mics] (time-invariant) or
    [frames x freq x mics] (per frame)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim not in (2, 3):
            raise ValueError(f"weights must be 2-D or 3-D, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("weights contain non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def per_frame(self) -> bool:
        return self.values.ndim == 3


@dataclass(frozen=True)
class BeamPattern:
    """Array gain per look angle, [segments x angles], linear scale."""

    gains: np.ndarray
    angle_grid: np.ndarray
    segment_labels: tuple = ()

    def __post_init__(self):
        gains = np.atleast_2d(np.asarray(self.gains, dtype=np.float64))
        angles = np.asarray(self.angle_grid, dtype=np.float64)
        if gains.shape[1] != angles.shape[0]:
            raise ValueError(f"{gains.shape[1]} gains vs {angles.shape[0]} angles")
        if gains.min() < 0:
            raise ValueError("gains must be nonnegative")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "angle_grid", angles)


def steering_vector(theta_deg: float, frequencies, array: ArrayGeometry,
                    speed_of_sound: float = 343.0,
                    sample_rate: int | None = None) -> SteeringVector:
    """Anechoic plane-wave steering vector for a linear array.

    Element m is exp(-j 2 pi f tau_m) with tau_m = x_m cos(theta) / c and
    x_m the axial mic coordinate relative to the reference mic.
    """
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=np.float64))
    if sample_rate is not None and freqs.max() > sample_rate / 2 + 1e-9:
        raise ValueError(
            f"frequency {freqs.max():.1f} Hz above Nyquist ({sample_rate / 2:.1f})"
        )
    taus = array.axial_coordinates() * np.cos(np.radians(theta_deg)) / speed_of_sound
    values = np.exp(-2j * np.pi * np.outer(freqs, taus))
    return SteeringVector(values=values, theta_deg=theta_deg, frequencies=freqs)


def pca_steering(phi_ss, reference_mic: int = 0) -> SteeringResult:
    """Principal eigenvector of the speech covariance per frequency.

    The phase ambiguity is fixed by rotating the reference-mic element to
    the positive real axis.  Frequencies whose top two eigenvalues are
    closer than 1e-9 of the trace are flagged as degenerate.
    """
    matrices = phi_ss.matrices if isinstance(phi_ss, CovarianceField) else np.asarray(phi_ss)
    squeeze = matrices.ndim == 2
    if squeeze:
        matrices = matrices[None]
    eigvals, eigvecs = np.linalg.eigh(matrices)
    principal = eigvecs[..., -1]  # unit norm, arbitrary phase
    ref = principal[:, reference_mic]
    ref_mag = np.abs(ref)
    phase = np.where(ref_mag > 0, np.conj(ref) / np.where(ref_mag > 0, ref_mag, 1.0), 1.0)
    vectors = principal * phase[:, None]
    trace = np.einsum("...ii->...", matrices).real
    gap = eigvals[:, -1] - eigvals[:, -2]
    degenerate = gap < _DEGENERACY_GAP * np.maximum(trace, 1e-300)
    if squeeze:
        return SteeringResult(vectors=vectors[0], degenerate=degenerate[0])
    return SteeringResult(vectors=vectors, degenerate=degenerate)


def _steering_array(steering) -> np.ndarray:
    if isinstance(steering, SteeringVector):
        return steering.values
    if isinstance(steering, SteeringResult):
        return np.atleast_2d(steering.vectors)
    return np.atleast_2d(np.asarray(steering, dtype=np.complex128))


def mvdr_weights(phi_nn, steering, loading_factor: float = DEFAULT_LOADING) -> BeamWeights:
    """Closed-form MVDR solve per frequency with relative diagonal loading.

    w = (Phi_l)^-1 a / (a^H (Phi_l)^-1 a) with Phi_l = Phi + loading *
    (trace/M) * I, computed through a Hermitian linear solve rather than an
    explicit inverse.  Satisfies w^H a = 1 up to rounding.
    """
    matrices = phi_nn.matrices if isinstance(phi_nn, CovarianceField) else np.asarray(phi_nn)
    squeeze = matrices.ndim == 2
    if squeeze:
        matrices = matrices[None]
    alphas = _steering_array(steering)
    if alphas.shape[0] == 1 and matrices.shape[0] > 1:
        alphas = np.broadcast_to(alphas, (matrices.shape[0], alphas.shape[1]))
    if alphas.shape != matrices.shape[:-1]:
        raise ValueError(
            f"steering shape {alphas.shape} does not match covariances "
            f"{matrices.shape}"
        )
    if np.any(np.linalg.norm(alphas, axis=-1) == 0.0):
        raise ValueError("steering vector is zero at some frequency")
    m = matrices.shape[-1]
    trace = np.einsum("...ii->...", matrices).real
    loaded = matrices + (loading_factor * trace / m)[:, None, None] * np.eye(m)
    try:
        numer = np.linalg.solve(loaded, alphas[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"noise covariance singular even after loading: {exc}") from exc
    denom = np.einsum("fm,fm->f", np.conj(alphas), numer)
    if np.any(np.abs(denom) < 1e-300) or not np.all(np.isfinite(numer)):
        raise ValueError("noise covariance singular even after loading")
    weights = numer / denom[:, None]
    return BeamWeights(values=weights[0] if squeeze else weights)


def delay_and_sum_weights(theta_deg: float, frequencies, array: ArrayGeometry,
                          speed_of_sound: float = 343.0) -> BeamWeights:
    """Matched steering weights alpha / M."""
    sv = steering_vector(theta_deg, frequencies, array, speed_of_sound)
    return BeamWeights(values=sv.values / array.num_mics)


def apply_beamformer(weights, spec: Spectrogram) -> Spectrogram:
    """Inner product w^H y per (frame, frequency); single-channel output.

    Per-frequency weights broadcast over frames; per-frame weights must
    match the spectrogram frame count.
    """
    w = weights.values if isinstance(weights, BeamWeights) else np.asarray(weights)
    bins = spec.bins  # [M x T x F]
    if w.ndim == 2:
        if w.shape != (spec.num_bins, spec.num_channels):
            raise ValueError(
                f"weights {w.shape} do not match [freq={spec.num_bins} x "
                f"mics={spec.num_channels}]"
            )
        out = np.einsum("fm,mtf->tf", np.conj(w), bins)
    elif w.ndim == 3:
        if w.shape != (spec.num_frames, spec.num_bins, spec.num_channels):
            raise ValueError(
                f"weights {w.shape} do not match [frames={spec.num_frames} x "
                f"freq={spec.num_bins} x mics={spec.num_channels}]"
            )
        out = np.einsum("tfm,mtf->tf", np.conj(w), bins)
    else:
        raise ValueError(f"weights must be 2-D or 3-D, got {w.shape}")
    return Spectrogram(bins=out[None], stft_config=spec.stft_config,
                       original_length=spec.original_length,
                       sample_rate=spec.sample_rate)


def beam_pattern(weights, array: ArrayGeometry, angle_grid, frequencies,
                 speed_of_sound: float = 343.0,
                 segments=None) -> BeamPattern:
    """|w^H alpha(theta)| averaged over frequency, per look angle.

    Per-frame weights may be averaged over labelled frame segments
    ``[(label, start, stop), ...]``; otherwise each frame is one row.
    Per-frequency weights give a single row.
    """
    angles = np.atleast_1d(np.asarray(angle_grid, dtype=np.float64))
    if angles.size == 0:
        raise ValueError("empty angle grid")
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=np.float64))
    w = weights.values if isinstance(weights, BeamWeights) else np.asarray(weights)

    taus = array.axial_coordinates()[None, :] * \
        np.cos(np.radians(angles))[:, None] / speed_of_sound  # [A x M]
    sv = np.exp(-2j * np.pi * freqs[:, None, None] * taus[None])  # [F x A x M]

    if w.ndim == 2:
        resp = np.einsum("fm,fam->fa", np.conj(w), sv)
        gains = np.abs(resp).mean(axis=0)[None, :]
        labels = ("all",)
    else:
        resp = np.einsum("tfm,fam->tfa", np.conj(w), sv)
        per_frame = np.abs(resp).mean(axis=1)  # [T x A]
        if segments is None:
            gains = per_frame
            labels = tuple(str(t) for t in range(per_frame.shape[0]))
        else:
            rows, labels = [], []
            for label, start, stop in segments:
                rows.append(per_frame[start:stop].mean(axis=0))
                labels.append(str(label))
            gains = np.stack(rows)
            labels = tuple(labels)
    return BeamPattern(gains=gains, angle_grid=angles, segment_labels=labels)


def export_beam_pattern_csv(path: str | os.PathLike, pattern: BeamPattern) -> None:
    """CSV with a header row of angles and one row of linear gains per segment."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["segment"] + [f"{a:g}" for a in pattern.angle_grid])
        labels = pattern.segment_labels or tuple(
            str(i) for i in range(pattern.gains.shape[0]))
        for label, row in zip(labels, pattern.gains):
            writer.writerow([label] + [f"{g:.10g}" for g in row])
