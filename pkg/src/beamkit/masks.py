"""Oracle time-frequency masks and mask-weighted spatial covariances.

Utterance-level covariances average mask-squared-weighted outer products
over frames (one Hermitian M x M matrix per frequency); frame-level
covariances keep the rank-1 outer product at every (frame, frequency).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_io import Spectrogram

CRM_BOUND = 10.0
_HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class RealMask:
    """Real mask in [0, 1], values laid out [freq x frames]."""

    values: np.ndarray
    kind: str = "irm"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim not in (2, 3):
            raise ValueError(f"mask must be 2-D or 3-D, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("mask contains non-finite values")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("real mask values must lie in [0, 1]")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ComplexMask:
    """Complex ratio mask with magnitude clipped to ``bound``."""

    values: np.ndarray
    kind: str = "crm"
    bound: float = CRM_BOUND

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim not in (2, 3):
            raise ValueError(f"mask must be 2-D or 3-D, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("mask contains non-finite values")
        if np.abs(values).max() > self.bound * (1 + 1e-12):
            raise ValueError(f"mask magnitude exceeds bound {self.bound}")
        object.__setattr__(self, "values", values)

    @property
    def real_plane(self) -> np.ndarray:
        return self.values.real

    @property
    def imag_plane(self) -> np.ndarray:
        return self.values.imag


def _ref_planes(target_spec: Spectrogram, mix_spec: Spectrogram,
                reference_mic: int):
    if target_spec.bins.shape != mix_spec.bins.shape:
        raise ValueError(
            f"spectrogram shapes differ: {target_spec.bins.shape} vs "
            f"{mix_spec.bins.shape}"
        )
    return target_spec.bins[reference_mic], mix_spec.bins[reference_mic]


def oracle_irm(target_spec: Spectrogram, mix_spec: Spectrogram,
               reference_mic: int = 0) -> RealMask:
    """|X| / |Y| on the reference channel, clamped to [0, 1]; 0 where |Y| = 0."""
    x, y = _ref_planes(target_spec, mix_spec, reference_mic)
    ymag = np.abs(y)
    mask = np.where(ymag > 0.0, np.abs(x) / np.where(ymag > 0.0, ymag, 1.0), 0.0)
    return RealMask(values=np.clip(mask, 0.0, 1.0).T, kind="irm")


def oracle_crm(target_spec: Spectrogram, mix_spec: Spectrogram,
               reference_mic: int = 0, bound: float = CRM_BOUND) -> ComplexMask:
    """Complex ratio X / Y on the reference channel, magnitude clipped to
    ``bound`` with phase preserved; 0 where |Y| = 0."""
    x, y = _ref_planes(target_spec, mix_spec, reference_mic)
    ymag = np.abs(y)
    ratio = np.where(ymag > 0.0, x / np.where(ymag > 0.0, y, 1.0), 0.0 + 0.0j)
    mag = np.abs(ratio)
    over = mag > bound
    ratio = np.where(over, ratio * (bound / np.where(over, mag, 1.0)), ratio)
    return ComplexMask(values=ratio.T, kind="crm", bound=bound)


def apply_mask(mask, spec: Spectrogram) -> Spectrogram:
    """Elementwise product of a mask with every channel of a spectrogram.

    A single [freq x frames] mask broadcasts across channels; a
    [channels x freq x frames] mask applies per channel.
    """
    values = mask.values if isinstance(mask, (RealMask, ComplexMask)) else np.asarray(mask)
    if values.ndim == 2:
        planes = values.T[None, :, :]  # -> [1 x frames x freq]
    elif values.ndim == 3:
        if values.shape[0] != spec.num_channels:
            raise ValueError(
                f"per-channel mask has {values.shape[0]} channels, "
                f"spectrogram has {spec.num_channels}"
            )
        planes = values.transpose(0, 2, 1)
    else:
        raise ValueError(f"mask must be 2-D or 3-D, got {values.shape}")
    if planes.shape[-2:] != spec.bins.shape[-2:]:
        raise ValueError(
            f"mask shape {values.shape} does not match spectrogram "
            f"[{spec.num_bins} x {spec.num_frames}]"
        )
    return Spectrogram(bins=spec.bins * planes, stft_config=spec.stft_config,
                       original_length=spec.original_length,
                       sample_rate=spec.sample_rate)


@dataclass(frozen=True)
class CovarianceField:
    """Hermitian M x M covariance matrices per frequency (utterance level,
    [freq x M x M]) or per frame and frequency ([frames x freq x M x M])."""

    matrices: np.ndarray
    kind: str = "speech"

    def __post_init__(self):
        matrices = np.asarray(self.matrices, dtype=np.complex128)
        if matrices.ndim not in (3, 4) or matrices.shape[-1] != matrices.shape[-2]:
            raise ValueError(f"expected [... x M x M] matrices, got {matrices.shape}")
        if not np.all(np.isfinite(matrices)):
            raise ValueError("covariance contains non-finite values")
        herm_err = np.abs(matrices - np.conj(np.swapaxes(matrices, -1, -2))).max()
        scale = max(np.abs(matrices).max(), 1e-300)
        if herm_err > 10 * _HERMITIAN_TOL * scale:
            raise ValueError(f"matrices not Hermitian: deviation {herm_err:.3e}")
        object.__setattr__(self, "matrices", matrices)

    @property
    def per_frame(self) -> bool:
        return self.matrices.ndim == 4

    @property
    def num_mics(self) -> int:
        return self.matrices.shape[-1]


def covariance_utterance(mask: RealMask, mix_spec: Spectrogram,
                         kind: str = "speech") -> CovarianceField:
    """Mask-squared-weighted average of Y Y^H per frequency.

    The weighting is normalized, so scaling the mask leaves the result
    unchanged.  A frequency whose mask is all-zero has no estimate and is
    reported as an error.
    """
    values = mask.values if isinstance(mask, RealMask) else np.asarray(mask)
    if values.ndim != 2:
        raise ValueError("utterance covariance expects a single [freq x frames] mask")
    if values.shape != (mix_spec.num_bins, mix_spec.num_frames):
        raise ValueError(
            f"mask shape {values.shape} does not match spectrogram "
            f"[{mix_spec.num_bins} x {mix_spec.num_frames}]"
        )
    weights = (values ** 2).T  # [frames x freq]
    denom = weights.sum(axis=0)
    dead = np.flatnonzero(denom == 0.0)
    if dead.size:
        raise ValueError(
            f"mask is all-zero at frequency bin(s) {dead[:8].tolist()}; "
            "covariance undefined there"
        )
    bins = mix_spec.bins  # [M x T x F]
    phi = np.einsum("atf,btf,tf->fab", bins, np.conj(bins), weights)
    phi /= denom[:, None, None]
    phi = 0.5 * (phi + np.conj(np.swapaxes(phi, -1, -2)))
    return CovarianceField(matrices=phi, kind=kind)


def covariance_framewise(masked_spec: Spectrogram,
                         kind: str = "speech") -> CovarianceField:
    """Rank-1 outer product of the masked snapshot at every (frame, freq)."""
    bins = masked_spec.bins  # [M x T x F]
    phi = np.einsum("atf,btf->tfab", bins, np.conj(bins))
    return CovarianceField(matrices=phi, kind=kind)
