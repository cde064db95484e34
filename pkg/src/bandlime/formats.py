"""Persisted artifact formats.

All JSON artifacts carry schema_version, kind, created_at (ISO-8601 UTC)
and tool_version. Dataset manifests are CSV with header path,label.
Writes go to a temporary file in the target directory and are renamed
into place, so a failed run never leaves a partial artifact.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from bandlime import __version__
from bandlime.explainer import Explanation
from bandlime.stats import CramerResult, EmotionAggregate

SCHEMA_VERSION = 1


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_json_atomic(payload: dict, path: str | Path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def read_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return payload


def _check_kind(payload: dict, kind: str, path: str | Path) -> None:
    if payload.get("kind") != kind:
        raise ValueError(f"{path}: expected kind {kind!r}, got {payload.get('kind')!r}")
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {payload.get('schema_version')!r}")


def _stamp(kind: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "created_at": utc_now_iso(),
        "tool_version": __version__,
    }


def explanation_payload(e: Explanation) -> dict:
    payload = _stamp("explanation")
    payload.update(
        {
            "target_class": e.target_class,
            "weights": list(e.weights),
            "intercept": e.intercept,
            "score": e.score,
            "band_edges_hz": list(e.band_edges_hz),
            "n_samples": e.n_samples,
            "kernel_width": e.kernel_width,
            "ridge_lambda": e.ridge_lambda,
            "seed": e.seed,
            "window_len": e.window_len,
            "hop_len": e.hop_len,
            "sample_rate_hz": e.sample_rate_hz,
            "source": e.source,
        }
    )
    return payload


def parse_explanation(payload: dict, path: str | Path = "<payload>") -> Explanation:
    _check_kind(payload, "explanation", path)
    return Explanation(
        weights=tuple(float(v) for v in payload["weights"]),
        intercept=float(payload["intercept"]),
        score=float(payload["score"]),
        target_class=payload["target_class"],
        band_edges_hz=tuple(float(v) for v in payload["band_edges_hz"]),
        n_samples=int(payload["n_samples"]),
        kernel_width=float(payload["kernel_width"]),
        ridge_lambda=float(payload["ridge_lambda"]),
        seed=int(payload["seed"]),
        window_len=int(payload["window_len"]),
        hop_len=int(payload["hop_len"]),
        sample_rate_hz=int(payload["sample_rate_hz"]),
        source=payload.get("source"),
    )


def write_explanation(e: Explanation, path: str | Path) -> None:
    write_json_atomic(explanation_payload(e), path)


def read_explanation(path: str | Path) -> Explanation:
    return parse_explanation(read_json(path), path)


def aggregate_payload(agg: EmotionAggregate, sources: list[str]) -> dict:
    if len(sources) != agg.n_utterances:
        raise ValueError("one source path per utterance is required")
    payload = _stamp("aggregate")
    payload.update(
        {
            "emotion": agg.emotion,
            "n_utterances": agg.n_utterances,
            "mean_weights": [float(v) for v in agg.mean_weights],
            "std_weights": [float(v) for v in agg.std_weights],
            "weight_matrix": [[float(v) for v in row] for row in agg.weight_matrix],
            "sources": list(sources),
        }
    )
    return payload


def parse_aggregate(
    payload: dict, path: str | Path = "<payload>"
) -> tuple[EmotionAggregate, list[str]]:
    _check_kind(payload, "aggregate", path)
    agg = EmotionAggregate(
        emotion=payload["emotion"],
        n_utterances=int(payload["n_utterances"]),
        mean_weights=np.asarray(payload["mean_weights"], dtype=np.float64),
        std_weights=np.asarray(payload["std_weights"], dtype=np.float64),
        weight_matrix=np.asarray(payload["weight_matrix"], dtype=np.float64),
    )
    return agg, list(payload["sources"])


def write_aggregate(agg: EmotionAggregate, sources: list[str], path: str | Path) -> None:
    write_json_atomic(aggregate_payload(agg, sources), path)


def read_aggregate(path: str | Path) -> tuple[EmotionAggregate, list[str]]:
    return parse_aggregate(read_json(path), path)


def cramer_payload(result: CramerResult, inputs: tuple[str, str], seed: int) -> dict:
    payload = _stamp("cramer")
    payload.update(
        {
            "statistic": result.statistic,
            "critical_value": result.critical_value,
            "p_value": result.p_value,
            "alpha": result.alpha,
            "n_permutations": result.n_permutations,
            "reject": result.reject,
            "seed": seed,
            "inputs": list(inputs),
        }
    )
    return payload


def parse_cramer(payload: dict, path: str | Path = "<payload>") -> CramerResult:
    _check_kind(payload, "cramer", path)
    return CramerResult(
        statistic=float(payload["statistic"]),
        critical_value=float(payload["critical_value"]),
        p_value=float(payload["p_value"]),
        alpha=float(payload["alpha"]),
        n_permutations=int(payload["n_permutations"]),
        reject=bool(payload["reject"]),
    )


def write_manifest(rows: list[tuple[str, str]], path: str | Path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["path", "label"])
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def read_manifest(path: str | Path) -> list[tuple[str, str]]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["path", "label"]:
            raise ValueError(f"{path}: manifest header must be path,label")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0] or not row[1]:
                raise ValueError(f"{path}:{lineno}: expected path,label")
            rows.append((row[0], row[1]))
    if not rows:
        raise ValueError(f"{path}: manifest lists no clips")
    return rows


@dataclass(frozen=True)
class SynthClassSpec:
    label: str
    band_gains: tuple[float, ...]


@dataclass(frozen=True)
class SynthSpec:
    sample_rate_hz: int
    duration_s: float
    clips_per_class: int
    seed: int
    classes: tuple[SynthClassSpec, ...]


def load_synth_spec(path: str | Path) -> SynthSpec:
    """Parse and validate a dataset synthesis description.

    Expected shape:
      {"sample_rate_hz": 16000, "duration_s": 1.0, "clips_per_class": 10,
       "seed": 0, "classes": [{"label": "angry", "band_gains": [1,0,...]}]}
    """
    payload = read_json(path)
    try:
        sample_rate = int(payload["sample_rate_hz"])
        duration = float(payload["duration_s"])
        clips_per_class = int(payload["clips_per_class"])
        seed = int(payload["seed"])
        raw_classes = payload["classes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: invalid synthesis spec: {exc}") from exc
    if duration <= 0 or clips_per_class < 1 or not isinstance(raw_classes, list):
        raise ValueError(f"{path}: invalid synthesis spec values")
    classes = []
    for entry in raw_classes:
        label = entry.get("label")
        gains = entry.get("band_gains")
        if not isinstance(label, str) or not label or not isinstance(gains, list):
            raise ValueError(f"{path}: each class needs a label and band_gains")
        gains = tuple(float(g) for g in gains)
        if not gains or any(g < 0 for g in gains) or not any(g > 0 for g in gains):
            raise ValueError(f"{path}: class {label!r} has an invalid gain profile")
        classes.append(SynthClassSpec(label=label, band_gains=gains))
    if not classes:
        raise ValueError(f"{path}: spec lists no classes")
    labels = [c.label for c in classes]
    if len(set(labels)) != len(labels):
        raise ValueError(f"{path}: duplicate class labels")
    return SynthSpec(
        sample_rate_hz=sample_rate,
        duration_s=duration,
        clips_per_class=clips_per_class,
        seed=seed,
        classes=tuple(classes),
    )
