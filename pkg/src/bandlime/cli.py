"""Command-line interface.

Subcommands:
  synth      synthesize a labeled dataset of band-shaped noise clips
  train      fit the built-in band-energy classifier on a manifest
  explain    explain one clip for one target class
  batch      explain every correctly-classified clip in a manifest
  aggregate  summarize batch output per emotion
  cramer     two-sample Cramér test between two aggregates
  render     draw an explanation or aggregate as SVG

Exit codes: 0 success, 2 bad arguments or malformed inputs, 3 I/O
failure, 4 predictor or protocol failure.

Model descriptors select the predictor: "builtin:<model.json>" loads the
band-energy model, "exec:<command line>" spawns an external predictor
speaking the line-delimited JSON wire protocol.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from bandlime import __version__, formats, render
from bandlime.audio import AudioClip, read_wav, synth_profile_noise, write_wav
from bandlime.explainer import ExplainerConfig, Predictor, PredictorError, explain
from bandlime.external import ExternalPredictor
from bandlime.models import BandEnergyModel, BandEnergyPredictor, train_band_energy_model
from bandlime.spectral import StftParams
from bandlime.stats import aggregate as aggregate_weights
from bandlime.stats import cramer_test

EXIT_BAD_ARGS = 2
EXIT_IO = 3
EXIT_PREDICTOR = 4


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("explainer options")
    group.add_argument("--seed", type=int, default=0)
    group.add_argument("--n-samples", type=int, default=1000)
    group.add_argument("--kernel-width", type=float, default=0.25)
    group.add_argument("--ridge-lambda", type=float, default=1.0)
    group.add_argument("--components", type=int, default=8)
    group.add_argument("--window", type=int, default=1024)
    group.add_argument("--hop", type=int, default=256)
    return parent


def _config_from_args(args: argparse.Namespace, seed: int | None = None) -> ExplainerConfig:
    return ExplainerConfig(
        n_components=args.components,
        n_samples=args.n_samples,
        kernel_width=args.kernel_width,
        ridge_lambda=args.ridge_lambda,
        seed=args.seed if seed is None else seed,
        stft=StftParams(window_len=args.window, hop_len=args.hop),
    )


def _load_predictor(descriptor: str) -> Predictor:
    if descriptor.startswith("builtin:"):
        model = BandEnergyModel.load(descriptor[len("builtin:"):])
        return BandEnergyPredictor(model)
    if descriptor.startswith("exec:"):
        return ExternalPredictor(descriptor[len("exec:"):])
    raise ValueError(
        f"model descriptor must start with builtin: or exec:, got {descriptor!r}"
    )


def _close_predictor(predictor: Predictor) -> None:
    if isinstance(predictor, ExternalPredictor):
        predictor.close()


def _print_explanation(e) -> None:
    for k, weight in enumerate(e.weights):
        lo, hi = e.band_edges_hz[k], e.band_edges_hz[k + 1]
        print(f"band {k} [{lo:.0f}-{hi:.0f} Hz]: {weight:+.6f}")
    print(f"intercept: {e.intercept:.6f}")
    print(f"score: {e.score:.6f}")


def cmd_synth(args: argparse.Namespace) -> int:
    spec = formats.load_synth_spec(args.spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for class_index, cls in enumerate(spec.classes):
        class_dir = out_dir / cls.label
        class_dir.mkdir(parents=True, exist_ok=True)
        for clip_index in range(spec.clips_per_class):
            entropy = np.random.SeedSequence([spec.seed, class_index, clip_index])
            clip = synth_profile_noise(
                cls.band_gains,
                spec.duration_s,
                spec.sample_rate_hz,
                seed=int(entropy.generate_state(1)[0]),
            )
            rel = f"{cls.label}/{clip_index:03d}.wav"
            write_wav(clip, out_dir / rel, encoding="float32")
            rows.append((rel, cls.label))
    formats.write_manifest(rows, out_dir / "manifest.csv")
    print(
        f"wrote {len(rows)} clips across {len(spec.classes)} classes to {out_dir}"
    )
    return 0


def _read_manifest_clips(path: str) -> list[tuple[Path, str]]:
    base = Path(path).parent
    return [(base / rel, label) for rel, label in formats.read_manifest(path)]


def cmd_train(args: argparse.Namespace) -> int:
    entries = _read_manifest_clips(args.manifest)
    clips = [read_wav(p) for p, _ in entries]
    labels = [label for _, label in entries]
    model = train_band_energy_model(
        clips,
        labels,
        n_components=args.components,
        params=StftParams(window_len=args.window, hop_len=args.hop),
        learning_rate=args.learning_rate,
        n_epochs=args.epochs,
        l2=args.l2,
        seed=args.seed,
    )
    model.save(args.out)
    print(f"classes: {', '.join(model.class_labels)}")
    print(f"training accuracy: {model.train_accuracy:.3f}")
    print(f"saved model to {args.out}")
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    clip = read_wav(args.wav)
    config = _config_from_args(args)
    predictor = _load_predictor(args.model)
    try:
        result = explain(clip, predictor, args.target, config, source=args.wav)
    finally:
        _close_predictor(predictor)
    formats.write_explanation(result, args.out)
    _print_explanation(result)
    print(f"saved explanation to {args.out}")
    return 0


def cmd_batch(args: argparse.Namespace) -> int:
    entries = _read_manifest_clips(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    predictor = _load_predictor(args.model)
    explained = []
    skipped = []
    try:
        known = set(predictor.class_labels)
        for _, label in entries:
            if label not in known:
                raise ValueError(
                    f"manifest label {label!r} unknown to the predictor "
                    f"(classes: {', '.join(sorted(known))})"
                )
        for index, (path, label) in enumerate(entries):
            clip = read_wav(path)
            scores = np.asarray(predictor.predict([clip]))[0]
            predicted = predictor.class_labels[int(np.argmax(scores))]
            if predicted != label:
                skipped.append(
                    {"path": str(path), "label": label, "predicted": predicted}
                )
                continue
            config = _config_from_args(args, seed=args.seed ^ index)
            result = explain(clip, predictor, label, config, source=str(path))
            out_name = f"{index:04d}_{Path(path).stem}.json"
            formats.write_explanation(result, out_dir / out_name)
            explained.append({"path": str(path), "label": label, "file": out_name})
    finally:
        _close_predictor(predictor)
    report = {
        "schema_version": formats.SCHEMA_VERSION,
        "kind": "batch-report",
        "created_at": formats.utc_now_iso(),
        "tool_version": __version__,
        "explained": explained,
        "skipped": skipped,
    }
    formats.write_json_atomic(report, out_dir / "batch_report.json")
    print(f"explained {len(explained)} clips, skipped {len(skipped)} misclassified")
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    batch_dir = Path(args.batch_dir)
    report = formats.read_json(batch_dir / "batch_report.json")
    if report.get("kind") != "batch-report":
        raise ValueError(f"{batch_dir}: batch_report.json has the wrong kind")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    by_label: dict[str, list[dict]] = {}
    for entry in report["explained"]:
        by_label.setdefault(entry["label"], []).append(entry)
    skipped_only = {
        entry["label"] for entry in report["skipped"]
    } - set(by_label)

    for label in sorted(by_label):
        entries = by_label[label]
        explanations = [
            formats.read_explanation(batch_dir / entry["file"]) for entry in entries
        ]
        agg = aggregate_weights(explanations, label)
        sources = [entry["path"] for entry in entries]
        out_path = out_dir / f"aggregate_{label}.json"
        formats.write_aggregate(agg, sources, out_path)
        print(f"{label}: aggregated {agg.n_utterances} utterances -> {out_path}")
    for label in sorted(skipped_only):
        print(
            f"warning: emotion {label!r} skipped, no correctly classified clips",
            file=sys.stderr,
        )
    return 0


def cmd_cramer(args: argparse.Namespace) -> int:
    agg_a, _ = formats.read_aggregate(args.aggregate_a)
    agg_b, _ = formats.read_aggregate(args.aggregate_b)
    if agg_a.n_components != agg_b.n_components:
        raise ValueError(
            f"aggregates disagree on band count: "
            f"{agg_a.n_components} vs {agg_b.n_components}"
        )
    result = cramer_test(
        agg_a.weight_matrix,
        agg_b.weight_matrix,
        alpha=args.alpha,
        n_permutations=args.permutations,
        seed=args.seed,
    )
    if args.out:
        payload = formats.cramer_payload(
            result, (str(args.aggregate_a), str(args.aggregate_b)), args.seed
        )
        formats.write_json_atomic(payload, args.out)
    print(f"statistic: {result.statistic:.6f}")
    print(f"critical_value: {result.critical_value:.6f}")
    print(f"p_value: {result.p_value:.6f}")
    print(f"reject: {'true' if result.reject else 'false'}")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    payload = formats.read_json(args.input)
    kind = payload.get("kind")
    mode = args.mode
    if mode == "auto":
        mode = {"explanation": "single", "aggregate": "aggregate"}.get(kind)
        if mode is None:
            raise ValueError(f"{args.input}: cannot render kind {kind!r}")
    spec = render.RenderSpec(
        mode=mode,
        positive_color=args.positive_color,
        negative_color=args.negative_color,
        annotate_weights=not args.no_annotate,
    )
    if mode == "single":
        explanation = formats.parse_explanation(payload, args.input)
        wav = args.wav or explanation.source
        if not wav:
            raise ValueError(
                f"{args.input} records no source wav; pass --wav explicitly"
            )
        clip = read_wav(wav)
        document = render.render_single_svg(explanation, clip, spec)
    else:
        agg, _ = formats.parse_aggregate(payload, args.input)
        document = render.render_aggregate_svg(agg, spec)
    out = Path(args.out)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text(document, encoding="utf-8")
    tmp.replace(out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandlime",
        description="Frequency-band surrogate explanations for audio classifiers",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    config = _config_parent()

    p = sub.add_parser("synth", help="synthesize a labeled noise dataset")
    p.add_argument("spec", help="dataset description JSON")
    p.add_argument("out_dir", help="output directory")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("train", help="train the built-in band-energy model")
    p.add_argument("manifest", help="CSV manifest with header path,label")
    p.add_argument("out", help="output model JSON")
    p.add_argument("--components", type=int, default=8)
    p.add_argument("--window", type=int, default=1024)
    p.add_argument("--hop", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--l2", type=float, default=1e-3)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("explain", parents=[config], help="explain one clip")
    p.add_argument("wav", help="input WAV file")
    p.add_argument("--model", required=True, help="builtin:<model.json> or exec:<command>")
    p.add_argument("--target", required=True, help="class label to explain")
    p.add_argument("--out", required=True, help="output explanation JSON")
    p.set_defaults(handler=cmd_explain)

    p = sub.add_parser(
        "batch", parents=[config], help="explain all correctly-classified clips"
    )
    p.add_argument("manifest", help="CSV manifest with header path,label")
    p.add_argument("--model", required=True, help="builtin:<model.json> or exec:<command>")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.set_defaults(handler=cmd_batch)

    p = sub.add_parser("aggregate", help="summarize batch output per emotion")
    p.add_argument("batch_dir", help="directory written by the batch command")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.set_defaults(handler=cmd_aggregate)

    p = sub.add_parser("cramer", help="two-sample Cramér test between aggregates")
    p.add_argument("aggregate_a")
    p.add_argument("aggregate_b")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--permutations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional result JSON path")
    p.set_defaults(handler=cmd_cramer)

    p = sub.add_parser("render", help="render an explanation or aggregate as SVG")
    p.add_argument("input", help="explanation or aggregate JSON")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--mode", choices=["auto", "single", "aggregate"], default="auto")
    p.add_argument("--wav", help="waveform for the spectrogram (defaults to source)")
    p.add_argument("--positive-color", default="#2ca02c")
    p.add_argument("--negative-color", default="#d62728")
    p.add_argument("--no-annotate", action="store_true")
    p.set_defaults(handler=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except PredictorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PREDICTOR
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
