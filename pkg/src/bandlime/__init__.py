"""Frequency-band LIME explanations for black-box audio classifiers.

Perturbs a waveform by zeroing equal-width frequency bands of its STFT,
queries a black-box classifier on the perturbed clips, and fits a
kernel-weighted ridge surrogate whose coefficients are the per-band
importance weights. Includes aggregation across utterances and a
permutation Cramer test for comparing weight distributions.
"""

from bandlime.audio import (
    AudioClip,
    EmptyAudioError,
    UnsupportedWavError,
    read_wav,
    synth_band_noise,
    synth_profile_noise,
    synth_tone,
    write_wav,
)
from bandlime.explainer import (
    Explanation,
    ExplainerConfig,
    PerturbationSet,
    Predictor,
    PredictorError,
    SingularDesignError,
    band_edges_hz,
    cosine_distance,
    explain,
    fit_weighted_ridge,
    generate_perturbations,
    kernel_weight,
    sample_masks,
)
from bandlime.external import ExternalPredictor, PredictorTimeout, ProtocolError
from bandlime.models import (
    BandEnergyModel,
    BandEnergyPredictor,
    band_energy_features,
    train_band_energy_model,
)
from bandlime.render import (
    RenderSpec,
    band_stripe_edges_hz,
    render_aggregate_svg,
    render_single_svg,
)
from bandlime.spectral import (
    BandLayout,
    Spectrogram,
    StftParams,
    apply_mask,
    istft,
    perturb_audio,
    stft,
)
from bandlime.stats import (
    CramerResult,
    EmotionAggregate,
    aggregate,
    cramer_statistic,
    cramer_test,
)

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "BandEnergyModel",
    "BandEnergyPredictor",
    "BandLayout",
    "CramerResult",
    "EmotionAggregate",
    "EmptyAudioError",
    "Explanation",
    "ExplainerConfig",
    "ExternalPredictor",
    "PerturbationSet",
    "Predictor",
    "PredictorError",
    "PredictorTimeout",
    "ProtocolError",
    "RenderSpec",
    "SingularDesignError",
    "Spectrogram",
    "StftParams",
    "UnsupportedWavError",
    "aggregate",
    "apply_mask",
    "band_edges_hz",
    "band_energy_features",
    "band_stripe_edges_hz",
    "cosine_distance",
    "cramer_statistic",
    "cramer_test",
    "explain",
    "fit_weighted_ridge",
    "generate_perturbations",
    "istft",
    "kernel_weight",
    "perturb_audio",
    "read_wav",
    "render_aggregate_svg",
    "render_single_svg",
    "sample_masks",
    "stft",
    "synth_band_noise",
    "synth_profile_noise",
    "synth_tone",
    "train_band_energy_model",
    "write_wav",
]
