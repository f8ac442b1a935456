"""Multichannel target speech extraction toolkit.

Room simulation (image source method), STFT front end, spatial features
(magnitude / cosIPD / angle feature), mask-based covariance estimation,
classical MVDR beamforming, a small autodiff engine with a toy neural
beamformer, and SI-SDR / STOI evaluation.
"""

__version__ = "0.1.0"

from .signal_io import (
    MultichannelWave,
    Spectrogram,
    StftConfig,
    istft,
    read_wav,
    stft,
    write_wav,
)
from .room import (
    ArrayGeometry,
    ImpulseResponseSet,
    MixtureScene,
    RoomConfig,
    SceneSimConfig,
    doa_of,
    generate_scene,
    mix_scene,
    simulate_rir,
)
from .features import (
    FeatureStack,
    angle_feature,
    cos_ipd,
    magnitude_ref,
    stack_features,
)
from .masks import (
    ComplexMask,
    CovarianceField,
    RealMask,
    apply_mask,
    covariance_framewise,
    covariance_utterance,
    oracle_crm,
    oracle_irm,
)
from .beamform import (
    BeamPattern,
    BeamWeights,
    SteeringResult,
    apply_beamformer,
    beam_pattern,
    delay_and_sum_weights,
    mvdr_weights,
    pca_steering,
    steering_vector,
)
from .metrics import MetricReport, si_sdr, stoi

__all__ = [
    "MultichannelWave",
    "Spectrogram",
    "StftConfig",
    "stft",
    "istft",
    "read_wav",
    "write_wav",
    "ArrayGeometry",
    "RoomConfig",
    "ImpulseResponseSet",
    "MixtureScene",
    "SceneSimConfig",
    "simulate_rir",
    "mix_scene",
    "generate_scene",
    "doa_of",
    "FeatureStack",
    "magnitude_ref",
    "cos_ipd",
    "angle_feature",
    "stack_features",
    "RealMask",
    "ComplexMask",
    "CovarianceField",
    "oracle_irm",
    "oracle_crm",
    "apply_mask",
    "covariance_utterance",
    "covariance_framewise",
    "SteeringResult",
    "BeamWeights",
    "BeamPattern",
    "steering_vector",
    "pca_steering",
    "mvdr_weights",
    "delay_and_sum_weights",
    "apply_beamformer",
    "beam_pattern",
    "si_sdr",
    "stoi",
    "MetricReport",
]
