"""Local surrogate explanations over frequency-band perturbations.

One explanation answers: which frequency bands of this clip push the
black-box score for one target class up or down? The pipeline is

1) Sample binary masks over the d' bands; the first mask keeps all bands.
2) Zero the dropped bands of the clip's STFT and resynthesize each variant.
3) Query the black-box predictor on the batch and keep the target column.
4) Weight each variant by exp(-cosine_distance^2 / width^2) against the
   all-ones mask.
5) Fit a weighted ridge model from mask bits to scores; its coefficients
   are the explanation weights.

Everything is deterministic for a fixed seed: same clip, same predictor,
same config gives a field-for-field identical explanation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from bandlime.audio import AudioClip
from bandlime.spectral import BandLayout, StftParams, apply_mask, istft, stft

DEFAULT_N_COMPONENTS = 8
DEFAULT_N_SAMPLES = 1000
DEFAULT_KERNEL_WIDTH = 0.25
DEFAULT_RIDGE_LAMBDA = 1.0


class PredictorError(RuntimeError):
    """The black-box predictor failed or returned unusable values."""


class SingularDesignError(ValueError):
    """Unpenalized ridge fit hit a rank-deficient design matrix."""


class Predictor:
    """Black-box scoring interface.

    predict() maps a batch of clips to an (n_clips, n_classes) array of
    non-negative finite scores. Rows need not sum to one; any score that is
    monotone in class confidence works. concurrent_safe declares whether
    predict() may be called from several threads at once.
    """

    n_classes: int
    class_labels: tuple[str, ...]
    concurrent_safe: bool = False

    def predict(self, clips: Sequence[AudioClip]) -> np.ndarray:
        raise NotImplementedError

    def class_index(self, label: str) -> int:
        try:
            return self.class_labels.index(label)
        except ValueError:
            raise ValueError(
                f"unknown class {label!r}; predictor knows {list(self.class_labels)}"
            ) from None


@dataclass(frozen=True)
class ExplainerConfig:
    n_components: int = DEFAULT_N_COMPONENTS
    n_samples: int = DEFAULT_N_SAMPLES
    kernel_width: float = DEFAULT_KERNEL_WIDTH
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    seed: int = 0
    stft: StftParams = field(default_factory=StftParams)

    def __post_init__(self) -> None:
        if self.n_components < 2:
            raise ValueError("n_components must be >= 2")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2: the surrogate needs variation")
        if self.kernel_width <= 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")


@dataclass(frozen=True)
class PerturbationSet:
    """Masks, target-class predictions, and kernel weights, index-aligned.

    Row 0 is always the unperturbed instance (all-ones mask, kernel
    weight exactly 1).
    """

    masks: np.ndarray  # (n, d') of 0/1
    predictions: np.ndarray  # (n,)
    kernel_weights: np.ndarray  # (n,) positive

    def __post_init__(self) -> None:
        n = self.masks.shape[0]
        if self.predictions.shape != (n,) or self.kernel_weights.shape != (n,):
            raise ValueError("masks, predictions, kernel_weights must align")
        if not np.all(self.masks[0] == 1):
            raise ValueError("first mask must be all-ones")
        if self.kernel_weights[0] != 1.0:
            raise ValueError("unperturbed instance must carry kernel weight 1")
        if np.any(self.kernel_weights <= 0):
            raise ValueError("kernel weights must be positive")


@dataclass(frozen=True)
class Explanation:
    """Per-band surrogate weights for one clip and one target class."""

    weights: tuple[float, ...]
    intercept: float
    score: float
    target_class: str
    band_edges_hz: tuple[float, ...]
    n_samples: int
    kernel_width: float
    ridge_lambda: float
    seed: int
    window_len: int
    hop_len: int
    sample_rate_hz: int
    source: str | None = None

    def __post_init__(self) -> None:
        if not all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        edges = np.asarray(self.band_edges_hz)
        if edges.size != len(self.weights) + 1 or np.any(np.diff(edges) <= 0):
            raise ValueError("band_edges_hz must be strictly increasing, d'+1 long")

    @property
    def n_components(self) -> int:
        return len(self.weights)


def band_edges_hz(sample_rate_hz: int, n_components: int) -> tuple[float, ...]:
    """Equal-width band edges from 0 up to Nyquist."""
    nyquist = sample_rate_hz / 2.0
    return tuple(k * nyquist / n_components for k in range(n_components + 1))


def sample_masks(n: int, n_components: int, seed: int) -> np.ndarray:
    """n binary masks of length n_components; row 0 is all ones, the rest
    have each bit drawn Bernoulli(0.5) from a seeded generator. All-zero
    draws are kept: silence is a legitimate perturbation."""
    if n < 2:
        raise ValueError("n must be >= 2: the surrogate needs variation")
    rng = np.random.default_rng(seed)
    masks = np.empty((n, n_components), dtype=np.int64)
    masks[0] = 1
    masks[1:] = rng.integers(0, 2, size=(n - 1, n_components))
    return masks


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b); an all-zero vector is maximally distant (1.0)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 1.0
    if np.array_equal(a, b):
        return 0.0
    return max(0.0, float(1.0 - np.dot(a, b) / (na * nb)))


def kernel_weight(distance: float, width: float) -> float:
    """exp(-distance^2 / width^2), in (0, 1]."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return float(np.exp(-(distance**2) / width**2))


def fit_weighted_ridge(
    masks: np.ndarray,
    targets: np.ndarray,
    sample_weights: np.ndarray,
    ridge_lambda: float,
) -> tuple[np.ndarray, float, float]:
    """Closed-form weighted ridge with an unpenalized intercept.

    Minimizes sum_i w_i (y_i - beta.z_i - b)^2 + lambda * ||beta||^2 by a
    dense solve of the weighted, centered normal equations. Returns
    (weights, intercept, score) where score is the kernel-weighted R^2 of
    the fit.

    Raises SingularDesignError when lambda is 0 and the centered design is
    rank-deficient.
    """
    Z = np.asarray(masks, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    w = np.asarray(sample_weights, dtype=np.float64)
    n, d = Z.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    if y.shape != (n,) or w.shape != (n,):
        raise ValueError("targets and sample_weights must match masks")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise ValueError("inputs must be finite")
    if np.any(w <= 0):
        raise ValueError("sample weights must be positive")

    if np.all(y == y[0]):
        # A constant target carries no mask signal; the exact minimizer is
        # all zeros with the constant as intercept, for any penalty.
        return np.zeros(d), float(y[0]) + 0.0, 1.0

    w_sum = w.sum()
    z_mean = (w[:, None] * Z).sum(axis=0) / w_sum
    y_mean = float(np.dot(w, y) / w_sum)
    Zc = Z - z_mean
    yc = y - y_mean
    gram = (Zc * w[:, None]).T @ Zc + ridge_lambda * np.eye(d)
    rhs = (Zc * w[:, None]).T @ yc
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError(
            "rank-deficient design with ridge_lambda=0; add regularization "
            "or more varied masks"
        ) from exc
    beta = beta + 0.0  # normalize -0.0 so serialized output is stable
    intercept = y_mean - float(np.dot(beta, z_mean))

    residual = y - (Z @ beta + intercept)
    ss_res = float(np.dot(w, residual**2))
    ss_tot = float(np.dot(w, yc**2))
    # Constant targets leave only rounding noise in ss_tot; R^2 is 0/0
    # there, so call a (numerically) perfect fit 1 and anything else 0.
    noise_floor = 1e-24 * float(np.dot(w, y**2))
    if ss_tot <= noise_floor:
        score = 1.0 if ss_res <= noise_floor else 0.0
    else:
        score = 1.0 - ss_res / ss_tot
    return beta, intercept, score


def generate_perturbations(
    clip: AudioClip,
    predictor: Predictor,
    target_class: str,
    config: ExplainerConfig,
) -> PerturbationSet:
    """Run steps 1-4 of the pipeline and bundle the aligned arrays.

    The spectrogram is computed once; each mask only re-zeroes bands and
    resynthesizes. Predictions are consumed in mask order regardless of how
    the predictor evaluates the batch internally.
    """
    col = predictor.class_index(target_class)
    masks = sample_masks(config.n_samples, config.n_components, config.seed)
    spec = stft(clip, config.stft)
    layout = BandLayout.for_bins(spec.n_bins, config.n_components)

    clips = [istft(apply_mask(spec, mask, layout)) for mask in masks]
    raw = np.asarray(predictor.predict(clips), dtype=np.float64)
    if raw.shape != (config.n_samples, predictor.n_classes):
        raise PredictorError(
            f"predictor returned shape {raw.shape}, expected "
            f"({config.n_samples}, {predictor.n_classes})"
        )
    bad = ~np.all(np.isfinite(raw), axis=1)
    if np.any(bad):
        raise PredictorError(
            f"non-finite prediction for mask index {int(np.argmax(bad))}"
        )
    if np.any(raw < 0):
        idx, _ = np.argwhere(raw < 0)[0]
        raise PredictorError(f"negative score for mask index {int(idx)}")

    ones = np.ones(config.n_components)
    distances = np.array([cosine_distance(m, ones) for m in masks])
    weights = np.array([kernel_weight(dist, config.kernel_width) for dist in distances])
    return PerturbationSet(
        masks=masks, predictions=raw[:, col], kernel_weights=weights
    )


def explain(
    clip: AudioClip,
    predictor: Predictor,
    target_class: str,
    config: ExplainerConfig | None = None,
    source: str | None = None,
) -> Explanation:
    """Explain one prediction of a black-box audio classifier.

    target_class must be one of predictor.class_labels; the surrogate is
    fit against that class's score column (one-vs-rest).
    """
    config = config or ExplainerConfig()
    pset = generate_perturbations(clip, predictor, target_class, config)
    weights, intercept, score = fit_weighted_ridge(
        pset.masks, pset.predictions, pset.kernel_weights, config.ridge_lambda
    )
    return Explanation(
        weights=tuple(float(v) for v in weights),
        intercept=float(intercept),
        score=float(score),
        target_class=target_class,
        band_edges_hz=band_edges_hz(clip.sample_rate_hz, config.n_components),
        n_samples=config.n_samples,
        kernel_width=config.kernel_width,
        ridge_lambda=config.ridge_lambda,
        seed=config.seed,
        window_len=config.stft.window_len,
        hop_len=config.stft.hop_len,
        sample_rate_hz=clip.sample_rate_hz,
        source=source,
    )
