"""Line-delimited stdio server that scores audio clips.

Speaks the external-predictor wire protocol used by bandlime: one JSON
object per line, UTF-8, over standard input/output. The server emits a
hello line first, answers every predict request with a per-class
probability vector, and exits 0 on bye. Audio arrives inline as base64
of little-endian float32 samples, so no temp files are needed and the
host that spawned us never has to link an ML runtime.

A malformed request never kills the process: it is answered with an
error line carrying the request id (when one could be parsed) and the
loop continues. Serving is stateless, so identical requests always get
identical responses.
"""

import argparse
import base64
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

KINDS = ("stub", "band-energy", "embedding-classifier")


class ConfigError(ValueError):
    """The server cannot start with the given configuration."""


@dataclass(frozen=True)
class AdapterConfig:
    """Which model to serve: a kind, its class labels, an optional file."""

    kind: str
    labels: tuple[str, ...]
    model_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if not self.labels:
            raise ConfigError("labels must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("labels must be unique")
        if self.kind == "band-energy" and not self.model_path:
            raise ConfigError("band-energy kind requires a model file")


class StubModel:
    """Uniform probabilities regardless of input; exercises the plumbing."""

    def __init__(self, n_classes: int):
        self.n_classes = n_classes

    def probs(self, samples: np.ndarray, sample_rate: int) -> list[float]:
        return [1.0 / self.n_classes] * self.n_classes


class BandEnergyModel:
    """Softmax over per-class linear scores of band energy fractions.

    The model file is JSON: {"coefficients": [[...], ...]} with one row
    per class label; the row length sets the number of frequency bands.
    """

    def __init__(self, coefficients: np.ndarray):
        self.coefficients = np.asarray(coefficients, dtype=np.float64)
        if self.coefficients.ndim != 2 or self.coefficients.shape[1] == 0:
            raise ConfigError("coefficients must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(self.coefficients)):
            raise ConfigError("coefficients must be finite")

    @classmethod
    def load(cls, path: str, n_classes: int) -> "BandEnergyModel":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read model file: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"model file is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict) or "coefficients" not in payload:
            raise ConfigError("model file must contain a coefficients matrix")
        model = cls(np.asarray(payload["coefficients"], dtype=np.float64))
        if model.coefficients.shape[0] != n_classes:
            raise ConfigError(
                f"model has {model.coefficients.shape[0]} coefficient rows "
                f"for {n_classes} labels"
            )
        return model

    def probs(self, samples: np.ndarray, sample_rate: int) -> list[float]:
        fractions = band_energy_fractions(samples, self.coefficients.shape[1])
        scores = self.coefficients @ fractions
        scores -= scores.max()
        weights = np.exp(scores)
        return (weights / weights.sum()).tolist()


def band_energy_fractions(samples: np.ndarray, n_bands: int) -> np.ndarray:
    """Fraction of spectral power in each of n_bands equal bin ranges."""
    spectrum = np.abs(np.fft.rfft(samples)) ** 2
    edges = [len(spectrum) * k // n_bands for k in range(n_bands + 1)]
    energies = np.array(
        [spectrum[lo:hi].sum() for lo, hi in zip(edges, edges[1:])]
    )
    total = energies.sum()
    if total <= 0.0:
        return np.zeros(n_bands)
    return energies / total


def build_model(config: AdapterConfig):
    if config.kind == "stub":
        return StubModel(len(config.labels))
    if config.kind == "band-energy":
        return BandEnergyModel.load(config.model_path, len(config.labels))
    # Hook for pretrained embedding backends; none ship with this package.
    raise ConfigError(
        "embedding-classifier models need an embedding runtime, which is "
        "not installed; use the stub or band-energy kind"
    )


def decode_samples(request: dict) -> np.ndarray:
    if "samples_b64" not in request:
        raise ValueError("predict request missing samples_b64")
    try:
        raw = base64.b64decode(request["samples_b64"], validate=True)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"samples_b64 is not valid base64: {exc}") from exc
    if len(raw) % 4 != 0:
        raise ValueError("samples_b64 does not decode to float32 samples")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def handle(model, request: dict) -> dict:
    kind = request.get("type")
    if kind != "predict":
        raise ValueError(f"unsupported request type {kind!r}")
    if "id" not in request:
        raise ValueError("predict request missing id")
    sample_rate = request.get("sample_rate")
    if not isinstance(sample_rate, int) or sample_rate <= 0:
        raise ValueError("predict request needs a positive integer sample_rate")
    samples = decode_samples(request)
    return {
        "type": "prediction",
        "id": request["id"],
        "probs": model.probs(samples, sample_rate),
    }


def say(stream, message: dict) -> None:
    stream.write(json.dumps(message) + "\n")
    stream.flush()


def serve(config: AdapterConfig, stdin=None, stdout=None) -> int:
    """Run the request loop; returns the process exit code.

    Configuration problems surface before the hello line is written, so
    a broken launch is distinguishable from a mid-conversation failure.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    model = build_model(config)
    say(
        stdout,
        {
            "type": "hello",
            "n_classes": len(config.labels),
            "labels": list(config.labels),
        },
    )
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request is not a JSON object")
        except ValueError as exc:
            say(stdout, {"type": "error", "id": None, "message": str(exc)})
            continue
        if request.get("type") == "bye":
            return 0
        try:
            reply = handle(model, request)
        except ValueError as exc:
            # Bad requests get an error line; the server stays up.
            say(
                stdout,
                {"type": "error", "id": request.get("id"), "message": str(exc)},
            )
            continue
        say(stdout, reply)
    # Peer closed the stream without bye; nothing left to serve.
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="audioscore",
        description="Serve audio-classifier predictions over stdin/stdout.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument(
        "--labels", required=True, help="comma-separated class labels"
    )
    parser.add_argument(
        "--model", help="model file path (required for band-energy)"
    )
    args = parser.parse_args(argv)
    labels = tuple(part.strip() for part in args.labels.split(",") if part.strip())
    try:
        config = AdapterConfig(kind=args.kind, labels=labels, model_path=args.model)
        return serve(config)
    except ConfigError as exc:
        print(f"audioscore: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
