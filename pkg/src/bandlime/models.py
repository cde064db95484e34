"""Built-in band-energy classifier.

A deliberately simple multinomial logistic model over per-band log
energies. It exists so the whole pipeline (synthesis, training,
explanation, aggregation) runs self-contained, and so tests have a
predictor whose behavior is fully understood: a model trained to key on
one band must yield explanations that put their largest weight on that
band.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from bandlime.audio import AudioClip
from bandlime.explainer import Predictor
from bandlime.spectral import BandLayout, StftParams, stft

MODEL_SCHEMA_VERSION = 1
ENERGY_FLOOR = 1e-10


def band_energy_features(
    clip: AudioClip,
    n_components: int,
    params: StftParams | None = None,
) -> np.ndarray:
    """Standardized log energies per frequency band.

    Sums |STFT|^2 within each of the n_components equal bin ranges, takes
    log10 with a small floor, then standardizes across the bands of this
    clip. Standardizing per clip makes the features insensitive to overall
    level: only the spectral shape matters.
    """
    params = params or StftParams()
    spec = stft(clip, params)
    layout = BandLayout.for_bins(spec.n_bins, n_components)
    power = np.abs(spec.frames.astype(np.complex128)) ** 2
    energies = np.array([power[:, lo:hi].sum() for lo, hi in layout.bin_ranges])
    logs = np.log10(energies + ENERGY_FLOOR)
    std = logs.std()
    if std < 1e-12:
        return np.zeros(n_components)
    return (logs - logs.mean()) / std


@dataclass(frozen=True)
class BandEnergyModel:
    """Multinomial logistic regression over band-energy features."""

    coefficients: np.ndarray  # (n_classes, n_components)
    intercepts: np.ndarray  # (n_classes,)
    class_labels: tuple[str, ...]
    n_components: int
    window_len: int
    hop_len: int
    train_accuracy: float | None = None

    def __post_init__(self) -> None:
        k = len(self.class_labels)
        if self.coefficients.shape != (k, self.n_components):
            raise ValueError("coefficients must be (n_classes, n_components)")
        if self.intercepts.shape != (k,):
            raise ValueError("intercepts must be (n_classes,)")
        if k < 2:
            raise ValueError("need at least 2 classes")

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def stft_params(self) -> StftParams:
        return StftParams(window_len=self.window_len, hop_len=self.hop_len)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Softmax class probabilities for an (n, n_components) batch."""
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
        logits = X @ self.coefficients.T + self.intercepts
        logits -= logits.max(axis=1, keepdims=True)
        expd = np.exp(logits)
        return expd / expd.sum(axis=1, keepdims=True)

    def save(self, path: str | Path) -> None:
        payload = {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": "band-energy-logistic",
            "class_labels": list(self.class_labels),
            "n_components": self.n_components,
            "window_len": self.window_len,
            "hop_len": self.hop_len,
            "coefficients": [[float(v) for v in row] for row in self.coefficients],
            "intercepts": [float(v) for v in self.intercepts],
        }
        if self.train_accuracy is not None:
            payload["train_accuracy"] = float(self.train_accuracy)
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BandEnergyModel":
        try:
            payload = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"not a model file: {path}") from exc
        if payload.get("kind") != "band-energy-logistic":
            raise ValueError(f"unsupported model kind in {path}")
        if payload.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema_version in {path}")
        accuracy = payload.get("train_accuracy")
        return cls(
            coefficients=np.asarray(payload["coefficients"], dtype=np.float64),
            intercepts=np.asarray(payload["intercepts"], dtype=np.float64),
            class_labels=tuple(payload["class_labels"]),
            n_components=int(payload["n_components"]),
            window_len=int(payload["window_len"]),
            hop_len=int(payload["hop_len"]),
            train_accuracy=None if accuracy is None else float(accuracy),
        )

    @classmethod
    def constant(
        cls,
        class_labels: Sequence[str],
        n_components: int = 8,
        params: StftParams | None = None,
    ) -> "BandEnergyModel":
        """All-zero model: every clip scores exactly 1/n_classes per class."""
        params = params or StftParams()
        k = len(class_labels)
        return cls(
            coefficients=np.zeros((k, n_components)),
            intercepts=np.zeros(k),
            class_labels=tuple(class_labels),
            n_components=n_components,
            window_len=params.window_len,
            hop_len=params.hop_len,
        )


def train_band_energy_model(
    clips: Sequence[AudioClip],
    labels: Sequence[str],
    n_components: int = 8,
    params: StftParams | None = None,
    learning_rate: float = 0.5,
    n_epochs: int = 200,
    l2: float = 1e-3,
    seed: int = 0,
) -> BandEnergyModel:
    """Full-batch gradient descent on the softmax cross-entropy.

    Classes are the sorted distinct labels. The problem is tiny (d' inputs,
    a handful of classes) so plain gradient descent converges comfortably;
    the small l2 term keeps coefficients bounded on separable data.
    """
    if len(clips) != len(labels) or not clips:
        raise ValueError("clips and labels must be non-empty and aligned")
    params = params or StftParams()
    class_labels = tuple(sorted(set(labels)))
    if len(class_labels) < 2:
        raise ValueError("need at least 2 distinct labels")
    for label in class_labels:
        if labels.count(label) < 2:
            raise ValueError(f"class {label!r} has fewer than 2 clips")
    index = {label: i for i, label in enumerate(class_labels)}

    X = np.stack([band_energy_features(c, n_components, params) for c in clips])
    y = np.array([index[label] for label in labels])
    n, k = len(clips), len(class_labels)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    rng = np.random.default_rng(seed)
    W = rng.normal(scale=0.01, size=(k, n_components))
    b = np.zeros(k)
    for _ in range(n_epochs):
        logits = X @ W.T + b
        logits -= logits.max(axis=1, keepdims=True)
        expd = np.exp(logits)
        probs = expd / expd.sum(axis=1, keepdims=True)
        err = probs - onehot
        W -= learning_rate * (err.T @ X / n + l2 * W)
        b -= learning_rate * err.mean(axis=0)

    predicted = (X @ W.T + b).argmax(axis=1)
    accuracy = float((predicted == y).mean())
    return BandEnergyModel(
        coefficients=W,
        intercepts=b,
        class_labels=class_labels,
        n_components=n_components,
        window_len=params.window_len,
        hop_len=params.hop_len,
        train_accuracy=accuracy,
    )


class BandEnergyPredictor(Predictor):
    """Predictor adapter around a BandEnergyModel."""

    concurrent_safe = True

    def __init__(self, model: BandEnergyModel):
        self.model = model
        self.n_classes = model.n_classes
        self.class_labels = model.class_labels

    def predict(self, clips: Sequence[AudioClip]) -> np.ndarray:
        params = self.model.stft_params()
        X = np.stack(
            [band_energy_features(c, self.model.n_components, params) for c in clips]
        )
        return self.model.predict_proba(X)
