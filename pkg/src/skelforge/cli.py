"""Command-line entry point.

Exit codes: 0 success, 2 usage, 3 configuration, 4 runtime/data,
5 numeric failure. Every subcommand writes a run manifest
(``run_manifest.json``) into its output location before doing work and
finalizes it with the outcome; all randomized subcommands take --seed.
"""

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import Config, load_profile
from .errors import ConfigError, DataError, SkelforgeError
from .runmanifest import ManifestWriter, RunManifest

log = logging.getLogger("skelforge")

RUN_MANIFEST_NAME = "run_manifest.json"


def _build_config(args) -> Config:
    config = load_profile(args.profile) if getattr(args, "profile", None) else Config()
    if getattr(args, "config", None):
        config.update_from_file(args.config)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        config.set(key.strip(), value.strip())
    return config


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--profile", help="bundled profile name (e.g. desk) or cfg path")
    parser.add_argument("--config", help="config file overriding the profile")
    parser.add_argument(
        "--set", action="append", metavar="KEY=VALUE",
        help="override a single config key (repeatable)",
    )


def _manifest(args, config: Config, out: Path, seeds: list[int], inputs: dict[str, str]):
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command=" ".join(sys.argv[1:]) or args.command,
        config=config.snapshot(),
        seeds=seeds,
        inputs=inputs,
        outputs=[str(out)],
    )
    return ManifestWriter(out / RUN_MANIFEST_NAME, manifest)


def _dataset_inputs(*dirs: str | Path) -> dict[str, str]:
    from .dataset import dataset_digest

    return {str(d): dataset_digest(d) for d in dirs if d}


# ---------------------------------------------------------------- commands


def _cmd_gen_toy_data(args) -> int:
    from .dataset import save_dataset
    from .skeleton import default_skeleton
    from .toydata import generate_toy_dataset

    config = _build_config(args)
    classes = args.classes if args.classes is not None else config.get_int("data.classes")
    per_class = args.per_class if args.per_class is not None else config.get_int("data.per_class")
    frames = args.frames if args.frames is not None else config.get_int("data.frames")
    seed = args.seed if args.seed is not None else config.get_int("data.seed")
    out = Path(args.out)
    with _manifest(args, config, out, [seed], {}):
        manifest, clips = generate_toy_dataset(
            default_skeleton(), classes, per_class, frames, seed
        )
        save_dataset(out, manifest, clips)
        print(f"wrote {len(clips)} clips across {classes} classes to {out}")
    return 0


def _cmd_train_diffusion(args) -> int:
    from .checkpoint import file_digest, save_denoiser
    from .dataset import encode_clips, load_dataset
    from .denoiser import ModelConfig
    from .diffusion import make_linear_schedule
    from .features import fit_normalization, normalize
    from .skeleton import default_skeleton
    from .training import TrainSettings, train_denoiser

    config = _build_config(args)
    for key, flag in (
        ("train.epochs", args.epochs), ("train.lr", args.lr),
        ("train.batch_size", args.batch_size), ("train.seed", args.seed),
        ("diffusion.steps", args.steps), ("loss.lambda_cls", args.lambda_cls),
    ):
        if flag is not None:
            config.set(key, flag)
    out = Path(args.out)
    seed = config.get_int("train.seed")
    with _manifest(args, config, out, [seed], _dataset_inputs(args.data)) as run:
        manifest, clips = load_dataset(args.data)
        skeleton = default_skeleton()
        features = encode_clips(clips, skeleton)
        stats = fit_normalization(features)
        normalized = [normalize(f, stats) for f in features]
        labels = np.array([c.label for c in clips])

        model_cfg = ModelConfig(
            num_classes=manifest.num_classes,
            d_model=config.get_int("model.d_model"),
            layers=config.get_int("model.layers"),
            heads=config.get_int("model.heads"),
            feed_forward_dim=config.get_int("model.feed_forward"),
            max_frames=config.get_int("model.max_frames"),
            internal_dropout=config.get_float("model.internal_dropout"),
        )
        schedule = make_linear_schedule(
            config.get_int("diffusion.steps"),
            config.get_float("diffusion.beta_start"),
            config.get_float("diffusion.beta_end"),
        )
        settings = TrainSettings(
            epochs=config.get_int("train.epochs"),
            batch_size=config.get_int("train.batch_size"),
            lr=config.get_float("train.lr"),
            lambda_cls=config.get_float("loss.lambda_cls"),
            window=config.get_int("train.window"),
            seed=seed,
            checkpoint_every=config.get_int("train.checkpoint_every"),
        )
        ckpt_dir = out / "checkpoints"
        result = train_denoiser(
            normalized, labels, model_cfg, schedule, settings, checkpoint_dir=ckpt_dir
        )
        ckpt = ckpt_dir / "final.skdf"
        save_denoiser(ckpt, result.model, schedule=schedule, stats=stats, window=settings.window)
        with open(out / "loss_history.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["epoch", "total", "rec", "cls", "lr"])
            writer.writeheader()
            for record in result.history:
                writer.writerow(record.to_json())
        run.checkpoints[str(ckpt)] = file_digest(ckpt)
        print(f"final loss {result.history[-1].total:.4f}; checkpoint at {ckpt}")
    return 0


def _cmd_sample(args) -> int:
    from .dataset import (
        ClipEntry, DatasetManifest, MotionClip, encode_clips, load_dataset, save_dataset,
    )
    from .features import decode_features, denormalize, normalize
    from .protocol import load_artifact
    from .reports import GENERATION_REPORT_SCHEMA, write_report
    from .sampler import SamplingConfig, generate
    from .skeleton import default_skeleton

    config = _build_config(args)
    out = Path(args.out)
    tau = float(args.tau) if args.tau is not None else config.get_float("sampling.tau")
    sampling = SamplingConfig(
        num_samples=args.count,
        label=args.label,
        frames=args.frames if args.frames is not None else config.get_int("sampling.frames"),
        dropout_rate=args.dropout if args.dropout is not None else config.get_float("sampling.dropout"),
        grm_tau=tau,
        guidance_scale=args.guidance if args.guidance is not None else config.get_float("sampling.guidance"),
        seed=args.seed if args.seed is not None else config.get_int("sampling.seed"),
    )
    inputs = _dataset_inputs(args.real) if args.real else {}
    with _manifest(args, config, out, [sampling.seed], inputs):
        artifact = load_artifact(args.ckpt)
        skeleton = default_skeleton()
        references: list[np.ndarray] = []
        class_names = None
        if args.real:
            real_manifest, real_clips = load_dataset(args.real)
            class_names = real_manifest.class_names
            same = [c for c in real_clips if c.label == args.label]
            references = [
                normalize(f, artifact.stats) for f in encode_clips(same, skeleton)
            ]
        if not references and not math.isinf(sampling.grm_tau):
            raise DataError(
                "finite --tau needs --real DIR with clips of the requested label"
            )
        batch = generate(artifact.model, artifact.schedule, sampling, references)

        num_classes = artifact.model.config.num_classes
        names = class_names or [f"class{i}" for i in range(num_classes)]
        clips, entries = [], []
        for i, feat in enumerate(batch.features):
            frames = decode_features(denormalize(feat, artifact.stats), skeleton)
            clip_id = f"gen_{args.label:02d}_{i:04d}"
            clips.append(MotionClip(id=clip_id, label=args.label, frames=frames))
            entries.append(
                ClipEntry(id=clip_id, label=args.label, num_frames=len(frames),
                          path=f"clips/{clip_id}.f32")
            )
        save_dataset(out, DatasetManifest(num_classes, list(names), entries), clips)

        hist_counts, hist_edges = np.histogram(
            batch.grm_distances, bins=10
        ) if len(batch.grm_distances) else (np.zeros(0, dtype=int), np.zeros(1))
        write_report(
            out / "generation_report.json",
            {
                "label": args.label,
                "requested": sampling.num_samples,
                "retained": int(len(batch.features)),
                "rejection_rate": batch.rejection_rate,
                "shortfall": batch.shortfall,
                "distance_histogram": {
                    "edges": [float(e) for e in hist_edges],
                    "counts": [int(c) for c in hist_counts],
                },
                "provenance": batch.provenance,
            },
            GENERATION_REPORT_SCHEMA,
        )
        print(
            f"retained {len(batch.features)}/{sampling.num_samples} samples "
            f"(rejection rate {batch.rejection_rate:.3f}) -> {out}"
        )
    return 0


def _cmd_train_recognizer(args) -> int:
    from .checkpoint import file_digest, save_recognizer
    from .dataset import load_dataset
    from .recognizer import AugPolicy, RecognizerConfig, train_recognizer
    from .skeleton import default_skeleton

    config = _build_config(args)
    out = Path(args.out)
    seed = args.seed if args.seed is not None else 0
    inputs = _dataset_inputs(args.data, args.synthetic or None)
    with _manifest(args, config, out, [seed], inputs) as run:
        manifest, clips = load_dataset(args.data)
        recognizer_cfg = RecognizerConfig(
            num_classes=manifest.num_classes,
            channels=tuple(config.get_ints("recognizer.channels")),
            temporal_kernel=config.get_int("recognizer.temporal_kernel"),
            window=config.get_int("recognizer.window"),
            epochs=args.epochs if args.epochs is not None else config.get_int("recognizer.epochs"),
            lr=config.get_float("recognizer.lr"),
            batch_size=config.get_int("recognizer.batch_size"),
        )
        synthetic = None
        if args.synthetic:
            _, synthetic = load_dataset(args.synthetic)
        policy = AugPolicy(kind=args.policy)
        model, history = train_recognizer(
            clips, recognizer_cfg, default_skeleton(),
            policy=policy, synthetic=synthetic, seed=seed,
        )
        ckpt = out / "recognizer.skdf"
        save_recognizer(ckpt, model)
        run.checkpoints[str(ckpt)] = file_digest(ckpt)
        with open(out / "training_history.json", "w", encoding="utf-8") as fh:
            json.dump(history, fh, indent=2)
            fh.write("\n")
        print(f"final train accuracy {history[-1]['train_acc']:.4f}; checkpoint at {ckpt}")
    return 0


def _cmd_evaluate(args) -> int:
    from .checkpoint import load_recognizer
    from .dataset import load_dataset
    from .recognizer import evaluate_accuracy

    config = _build_config(args)
    out = Path(args.out)
    with _manifest(args, config, out.parent, [], _dataset_inputs(args.data)):
        model, _ = load_recognizer(args.recognizer)
        manifest, clips = load_dataset(args.data)
        accuracy, confusion = evaluate_accuracy(model, clips, manifest.num_classes)
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(
                {"accuracy": accuracy, "confusion": confusion.tolist(),
                 "num_clips": len(clips)},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
        print(f"accuracy {accuracy:.4f} on {len(clips)} clips")
    return 0


def _cmd_evaluate_metrics(args) -> int:
    from .checkpoint import load_recognizer
    from .dataset import load_dataset
    from .metrics import EmbeddingSet, full_report
    from .recognizer import embed_clips
    from .reports import METRICS_REPORT_SCHEMA, write_report

    config = _build_config(args)
    out = Path(args.out)
    seed = args.seed if args.seed is not None else 0
    with _manifest(args, config, out.parent, [seed], _dataset_inputs(args.real, args.fake)):
        model, _ = load_recognizer(args.recognizer)
        real_manifest, real_clips = load_dataset(args.real)
        _, fake_clips = load_dataset(args.fake)
        real = EmbeddingSet(
            vectors=embed_clips(model, real_clips),
            labels=np.array([c.label for c in real_clips]),
            source="real",
        )
        fake = EmbeddingSet(
            vectors=embed_clips(model, fake_clips),
            labels=np.array([c.label for c in fake_clips]),
            source="synthetic",
        )
        report = full_report(real, fake, rng=np.random.default_rng(seed))
        write_report(out, report, METRICS_REPORT_SCHEMA)
        print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _parse_ckpt_mapping(items: list[str] | None) -> dict[float, str]:
    mapping: dict[float, str] = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--ckpt expects FRACTION=PATH, got {item!r}")
        frac, path = item.split("=", 1)
        try:
            mapping[float(frac)] = path
        except ValueError as exc:
            raise ConfigError(f"--ckpt fraction {frac!r} is not a number") from exc
    return mapping


def _auto_train_artifacts(
    config: Config, manifest, clips, skeleton, fractions, train_split, split_seed,
    existing: dict[float, str], out: Path,
):
    """Train a diffusion model per fraction that has no supplied checkpoint."""
    from .checkpoint import save_denoiser
    from .dataset import encode_clips
    from .denoiser import ModelConfig
    from .diffusion import make_linear_schedule
    from .features import fit_normalization, normalize
    from .protocol import DiffusionArtifact, load_artifact, training_subset
    from .training import TrainSettings, train_denoiser

    artifacts: dict[float, DiffusionArtifact] = {}
    clips_by_id = {c.id: c for c in clips}
    schedule = make_linear_schedule(
        config.get_int("diffusion.steps"),
        config.get_float("diffusion.beta_start"),
        config.get_float("diffusion.beta_end"),
    )
    for fraction in fractions:
        if fraction in existing:
            artifacts[fraction] = load_artifact(existing[fraction])
            continue
        subset_m = training_subset(manifest, fraction, train_split, split_seed)
        subset_clips = [clips_by_id[e.id] for e in subset_m.clips]
        features = encode_clips(subset_clips, skeleton)
        stats = fit_normalization(features)
        normalized = [normalize(f, stats) for f in features]
        labels = np.array([c.label for c in subset_clips])
        model_cfg = ModelConfig(
            num_classes=manifest.num_classes,
            d_model=config.get_int("model.d_model"),
            layers=config.get_int("model.layers"),
            heads=config.get_int("model.heads"),
            max_frames=config.get_int("model.max_frames"),
            internal_dropout=config.get_float("model.internal_dropout"),
        )
        settings = TrainSettings(
            epochs=config.get_int("train.epochs"),
            batch_size=config.get_int("train.batch_size"),
            lr=config.get_float("train.lr"),
            lambda_cls=config.get_float("loss.lambda_cls"),
            window=config.get_int("train.window"),
            seed=config.get_int("train.seed"),
        )
        log.info("auto-training diffusion model for fraction %.3f (%d clips)",
                 fraction, len(subset_clips))
        result = train_denoiser(normalized, labels, model_cfg, schedule, settings)
        ckpt = out / "checkpoints" / f"diffusion_frac{fraction:g}.skdf"
        save_denoiser(ckpt, result.model, schedule=schedule, stats=stats, window=settings.window)
        artifacts[fraction] = DiffusionArtifact(
            model=result.model, schedule=schedule, stats=stats, window=settings.window
        )
    return artifacts


def _recognizer_config(config: Config, num_classes: int):
    from .recognizer import RecognizerConfig

    return RecognizerConfig(
        num_classes=num_classes,
        channels=tuple(config.get_ints("recognizer.channels")),
        temporal_kernel=config.get_int("recognizer.temporal_kernel"),
        window=config.get_int("recognizer.window"),
        epochs=config.get_int("recognizer.epochs"),
        lr=config.get_float("recognizer.lr"),
        batch_size=config.get_int("recognizer.batch_size"),
    )


def _cmd_run_protocol(args) -> int:
    from .dataset import load_dataset
    from .protocol import load_artifact, run_protocol
    from .skeleton import default_skeleton

    config = _build_config(args)
    if args.fractions:
        config.set("protocol.fractions", args.fractions)
    if args.policies:
        config.set("protocol.policies", args.policies)
    if args.seeds is not None:
        config.set("protocol.seeds", str(args.seeds))
    out = Path(args.out)
    fractions = config.get_floats("protocol.fractions")
    policies = config.get_strs("protocol.policies")
    num_seeds = config.get_int("protocol.seeds")
    seeds = list(range(num_seeds))
    train_split = config.get_float("protocol.train_split")
    split_seed = config.get_int("protocol.split_seed")
    with _manifest(args, config, out, seeds, _dataset_inputs(args.data)):
        manifest, clips = load_dataset(args.data)
        skeleton = default_skeleton()
        supplied = _parse_ckpt_mapping(args.ckpt)
        if "synthetic" in policies:
            if args.auto_train:
                artifacts = _auto_train_artifacts(
                    config, manifest, clips, skeleton, fractions,
                    train_split, split_seed, supplied, out,
                )
            else:
                artifacts = {f: load_artifact(p) for f, p in supplied.items()}
        else:
            artifacts = {}
        cells = run_protocol(
            manifest, clips, skeleton, fractions, policies, seeds, artifacts,
            _recognizer_config(config, manifest.num_classes),
            multiplier=config.get_int("protocol.multiplier"),
            dropout=config.get_float("sampling.dropout"),
            tau=config.get_float("sampling.tau"),
            train_split=train_split,
            split_seed=split_seed,
            out_dir=out,
        )
        for cell in cells:
            print(
                f"fraction {cell.fraction:g} policy {cell.policy}: "
                f"{cell.mean_acc:.4f} +/- {cell.std_acc:.4f}"
            )
    return 0


def _cmd_run_ablation(args) -> int:
    from .dataset import load_dataset
    from .denoiser import ModelConfig
    from .diffusion import make_linear_schedule
    from .protocol import load_artifact, run_ablation
    from .skeleton import default_skeleton
    from .training import TrainSettings

    config = _build_config(args)
    out = Path(args.out)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be a comma list of numbers: {args.values!r}") from exc
    fractions = (
        [float(v) for v in args.fractions.split(",")] if args.fractions
        else config.get_floats("protocol.fractions")
    )
    num_seeds = args.seeds if args.seeds is not None else config.get_int("protocol.seeds")
    seeds = list(range(num_seeds))
    train_split = config.get_float("protocol.train_split")
    split_seed = config.get_int("protocol.split_seed")
    with _manifest(args, config, out, seeds, _dataset_inputs(args.data)):
        manifest, clips = load_dataset(args.data)
        skeleton = default_skeleton()
        supplied = _parse_ckpt_mapping(args.ckpt)
        if args.knob == "lambda_cls":
            artifacts = {}
            schedule = make_linear_schedule(
                config.get_int("diffusion.steps"),
                config.get_float("diffusion.beta_start"),
                config.get_float("diffusion.beta_end"),
            )
            retrain = (
                ModelConfig(
                    num_classes=manifest.num_classes,
                    d_model=config.get_int("model.d_model"),
                    layers=config.get_int("model.layers"),
                    heads=config.get_int("model.heads"),
                    max_frames=config.get_int("model.max_frames"),
                    internal_dropout=config.get_float("model.internal_dropout"),
                ),
                schedule,
                TrainSettings(
                    epochs=config.get_int("train.epochs"),
                    batch_size=config.get_int("train.batch_size"),
                    lr=config.get_float("train.lr"),
                    window=config.get_int("train.window"),
                    seed=config.get_int("train.seed"),
                ),
            )
        else:
            if args.auto_train:
                artifacts = _auto_train_artifacts(
                    config, manifest, clips, skeleton, fractions,
                    train_split, split_seed, supplied, out,
                )
            else:
                artifacts = {f: load_artifact(p) for f, p in supplied.items()}
            retrain = None
        cells, side = run_ablation(
            args.knob, values, manifest, clips, skeleton, artifacts,
            _recognizer_config(config, manifest.num_classes),
            fractions=fractions, seeds=seeds,
            multiplier=config.get_int("protocol.multiplier"),
            dropout=config.get_float("sampling.dropout"),
            tau=config.get_float("sampling.tau"),
            train_split=train_split, split_seed=split_seed,
            retrain=retrain, out_dir=out,
        )
        for cell in cells:
            print(
                f"{cell.policy} fraction {cell.fraction:g}: "
                f"{cell.mean_acc:.4f} +/- {cell.std_acc:.4f}"
            )
    return 0


def _cmd_plot(args) -> int:
    from .plots import plot_loss, plot_pca_scatter, plot_protocol

    config = _build_config(args)
    out = Path(args.out)
    inputs = {}
    if args.kind == "pca-scatter":
        inputs = _dataset_inputs(args.real, args.fake)
    with _manifest(args, config, out.parent, [], inputs):
        if args.kind == "loss":
            if not args.input:
                raise DataError("--kind loss needs --input loss_history.csv")
            plot_loss(args.input, out)
        elif args.kind == "protocol":
            if not args.input:
                raise DataError("--kind protocol needs --input protocol_results.csv")
            plot_protocol(args.input, out)
        else:
            from .checkpoint import load_recognizer
            from .dataset import load_dataset
            from .metrics import EmbeddingSet
            from .recognizer import embed_clips

            if not (args.real and args.fake and args.recognizer):
                raise DataError("--kind pca-scatter needs --real, --fake and --recognizer")
            model, _ = load_recognizer(args.recognizer)
            _, real_clips = load_dataset(args.real)
            _, fake_clips = load_dataset(args.fake)
            real = EmbeddingSet(
                vectors=embed_clips(model, real_clips),
                labels=np.array([c.label for c in real_clips]), source="real",
            )
            fake = EmbeddingSet(
                vectors=embed_clips(model, fake_clips),
                labels=np.array([c.label for c in fake_clips]), source="synthetic",
            )
            plot_pca_scatter(real, fake, out)
        print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------- dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelforge",
        description="Label-conditioned diffusion augmentation for skeleton action recognition",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen-toy-data", help="generate the procedural toy dataset")
    _add_common(p)
    p.add_argument("--classes", type=int)
    p.add_argument("--per-class", type=int, dest="per_class")
    p.add_argument("--frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_toy_data)

    p = sub.add_parser("train-diffusion", help="train the conditional denoiser")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--steps", type=int, help="diffusion chain length")
    p.add_argument("--lambda-cls", type=float, dest="lambda_cls")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_train_diffusion)

    p = sub.add_parser("sample", help="generate label-conditioned sequences")
    _add_common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--label", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--dropout", type=float)
    p.add_argument("--tau", type=float, help="refinement threshold; inf disables")
    p.add_argument("--guidance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--real", help="real dataset dir for refinement references")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("train-recognizer", help="train the graph-conv classifier")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--policy", default="none",
                   choices=["none", "gaussian_noise", "scaling", "rotating", "synthetic"])
    p.add_argument("--synthetic", help="generated dataset dir for the synthetic policy")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_train_recognizer)

    p = sub.add_parser("evaluate", help="recognizer accuracy on a dataset")
    _add_common(p)
    p.add_argument("--recognizer", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("evaluate-metrics", help="generative-quality metric suite")
    _add_common(p)
    p.add_argument("--real", required=True)
    p.add_argument("--fake", required=True)
    p.add_argument("--recognizer", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate_metrics)

    p = sub.add_parser("run-protocol", help="fraction x policy accuracy grid")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", help="comma list, e.g. 0.75,0.9,0.95,1.0")
    p.add_argument("--policies", help="comma list, e.g. none,synthetic")
    p.add_argument("--seeds", type=int, help="number of seeds per cell")
    p.add_argument("--ckpt", action="append", metavar="FRACTION=PATH")
    p.add_argument("--auto-train", action="store_true", dest="auto_train",
                   help="train missing per-fraction diffusion models")
    p.set_defaults(func=_cmd_run_protocol)

    p = sub.add_parser("run-ablation", help="sweep dropout / tau / lambda_cls")
    _add_common(p)
    p.add_argument("--knob", required=True, choices=["dropout", "tau", "lambda_cls"])
    p.add_argument("--values", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions")
    p.add_argument("--seeds", type=int)
    p.add_argument("--ckpt", action="append", metavar="FRACTION=PATH")
    p.add_argument("--auto-train", action="store_true", dest="auto_train")
    p.set_defaults(func=_cmd_run_ablation)

    p = sub.add_parser("plot", help="emit deterministic SVG figures")
    _add_common(p)
    p.add_argument("--kind", required=True, choices=["loss", "protocol", "pca-scatter"])
    p.add_argument("--input", help="CSV input for loss/protocol kinds")
    p.add_argument("--real")
    p.add_argument("--fake")
    p.add_argument("--recognizer")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def dispatch(argv: list[str]) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if not getattr(args, "command", None):
        parser.print_usage(file=sys.stderr)
        return 2
    try:
        return args.func(args) or 0
    except SkelforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - map everything else to runtime
        log.exception("unhandled failure")
        print(f"error: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
