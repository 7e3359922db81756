"""Downstream evaluation harness.

Grids over (real-data fraction, augmentation policy, seed): stratified
subsets of the training split, optional synthetic augmentation generated
by the fraction's diffusion model, recognizer training per seed, and
mean/std accuracy per cell. The ablation runner sweeps one knob of the
generation stage (or the loss weight, retraining the generator) and
reruns the downstream cell per value.
"""

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DatasetManifest, MotionClip, split_fraction
from .denoiser import Denoiser, ModelConfig
from .diffusion import NoiseSchedule
from .errors import DataError
from .features import NormalizationStats, decode_features, denormalize, normalize
from .recognizer import AugPolicy, RecognizerConfig, evaluate_accuracy, train_recognizer
from .sampler import SamplingConfig, generate
from .skeleton import Skeleton
from .training import TrainSettings, train_denoiser

log = logging.getLogger(__name__)


@dataclass
class DiffusionArtifact:
    """A trained generator plus everything needed to sample from it."""

    model: Denoiser
    schedule: NoiseSchedule
    stats: NormalizationStats
    window: int = 48


@dataclass
class ProtocolCell:
    fraction: float
    policy: str
    accuracies: list[float] = field(default_factory=list)
    knob_value: float | None = None

    @property
    def mean_acc(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_acc(self) -> float:
        return float(np.std(self.accuracies))


def load_artifact(path: str | Path) -> DiffusionArtifact:
    from .checkpoint import load_denoiser

    model, schedule, stats, config = load_denoiser(path)
    if schedule is None or stats is None:
        raise DataError(f"{path}: checkpoint lacks schedule/normalization tables")
    return DiffusionArtifact(
        model=model, schedule=schedule, stats=stats, window=int(config.get("window", 48))
    )


def _cell_seed(*parts) -> int:
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:4], "little")


def training_subset(
    manifest: DatasetManifest, fraction: float, train_split: float, split_seed: int
) -> DatasetManifest:
    """The stratified real-data subset a protocol cell trains on."""
    train_m, _ = split_fraction(manifest, train_split, split_seed)
    subset_m, _ = split_fraction(train_m, fraction, _cell_seed("fraction", split_seed, fraction))
    return subset_m


def synthesize_for_subset(
    artifact: DiffusionArtifact,
    subset_clips: list[MotionClip],
    skeleton: Skeleton,
    multiplier: int,
    dropout: float,
    tau: float,
    guidance: float = 0.0,
    seed: int = 0,
) -> tuple[list[MotionClip], dict]:
    """Generate multiplier-x synthetic clips per class of the subset.

    References for the refinement filter are the subset's own normalized
    features. Returns decoded clips plus a per-class generation summary.
    """
    from .dataset import encode_clips

    by_class: dict[int, list[int]] = {}
    for i, clip in enumerate(subset_clips):
        by_class.setdefault(clip.label, []).append(i)
    features = encode_clips(subset_clips, skeleton)
    normalized = [normalize(f, artifact.stats) for f in features]

    out: list[MotionClip] = []
    summary: dict = {"per_class": {}, "shortfall": False}
    for label, idxs in sorted(by_class.items()):
        config = SamplingConfig(
            num_samples=multiplier * len(idxs),
            label=label,
            frames=artifact.window,
            dropout_rate=dropout,
            grm_tau=tau,
            guidance_scale=guidance,
            seed=_cell_seed("synth", seed, label),
        )
        batch = generate(
            artifact.model, artifact.schedule, config, [normalized[i] for i in idxs]
        )
        summary["per_class"][str(label)] = {
            "requested": config.num_samples,
            "retained": int(len(batch.features)),
            "rejection_rate": batch.rejection_rate,
        }
        summary["shortfall"] = summary["shortfall"] or batch.shortfall
        for k, feat in enumerate(batch.features):
            frames = decode_features(denormalize(feat, artifact.stats), skeleton)
            out.append(
                MotionClip(id=f"synth_{label:02d}_{seed}_{k:04d}", label=label, frames=frames)
            )
    return out, summary


def _run_cell(
    train_clips: list[MotionClip],
    val_clips: list[MotionClip],
    policy: AugPolicy,
    synthetic: list[MotionClip] | None,
    recognizer_cfg: RecognizerConfig,
    skeleton: Skeleton,
    seeds: list[int],
) -> list[float]:
    accuracies = []
    for seed in seeds:
        model, _ = train_recognizer(
            train_clips, recognizer_cfg, skeleton,
            policy=policy, synthetic=synthetic, seed=seed,
        )
        acc, _ = evaluate_accuracy(model, val_clips, recognizer_cfg.num_classes)
        accuracies.append(acc)
    return accuracies


def run_protocol(
    manifest: DatasetManifest,
    clips: list[MotionClip],
    skeleton: Skeleton,
    fractions: list[float],
    policies: list[str],
    seeds: list[int],
    artifacts: dict[float, DiffusionArtifact],
    recognizer_cfg: RecognizerConfig,
    multiplier: int = 5,
    dropout: float = 0.2,
    tau: float = 20.0,
    train_split: float = 0.8,
    split_seed: int = 123,
    out_dir: str | Path | None = None,
) -> list[ProtocolCell]:
    """Accuracy grid over fractions x policies, averaged over seeds.

    Synthetic cells require a diffusion artifact for their fraction;
    generation happens once per (fraction) and is shared by all seeds of
    the cell, mirroring a fixed augmented dataset evaluated repeatedly.
    """
    clips_by_id = {c.id: c for c in clips}
    train_m, val_m = split_fraction(manifest, train_split, split_seed)
    val_clips = [clips_by_id[e.id] for e in val_m.clips]
    if not val_clips:
        raise DataError("validation split is empty; lower train_split")

    cells: list[ProtocolCell] = []
    runs: list[dict] = []
    for fraction in fractions:
        subset_m = training_subset(manifest, fraction, train_split, split_seed)
        subset_clips = [clips_by_id[e.id] for e in subset_m.clips]
        synthetic: list[MotionClip] | None = None
        synth_summary = None
        if "synthetic" in policies:
            if fraction not in artifacts:
                raise DataError(f"no diffusion checkpoint supplied for fraction {fraction}")
            synthetic, synth_summary = synthesize_for_subset(
                artifacts[fraction], subset_clips, skeleton, multiplier,
                dropout, tau, seed=_cell_seed("gen", split_seed, fraction),
            )
        for policy_name in policies:
            policy = AugPolicy(kind=policy_name, multiplier=multiplier)
            accs = _run_cell(
                subset_clips, val_clips, policy,
                synthetic if policy_name == "synthetic" else None,
                recognizer_cfg, skeleton, seeds,
            )
            cell = ProtocolCell(fraction=fraction, policy=policy_name, accuracies=accs)
            cells.append(cell)
            runs.append(
                {
                    "fraction": fraction,
                    "policy": policy_name,
                    "seeds": list(seeds),
                    "accuracies": accs,
                    "train_clips": len(subset_clips),
                    "synthetic_clips": len(synthetic) if policy_name == "synthetic" else 0,
                    "generation": synth_summary if policy_name == "synthetic" else None,
                }
            )
            log.info(
                "fraction %.2f policy %-14s acc %.4f +/- %.4f",
                fraction, policy_name, cell.mean_acc, cell.std_acc,
            )
    if out_dir is not None:
        write_protocol_outputs(Path(out_dir), cells, runs)
    return cells


def write_protocol_outputs(out_dir: Path, cells: list[ProtocolCell], runs: list[dict]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    baseline = {
        c.fraction: c.mean_acc for c in cells if c.policy == "none"
    }
    with open(out_dir / "protocol_results.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "policy", "mean_acc", "std_acc", "delta_vs_none"])
        for cell in cells:
            delta = cell.mean_acc - baseline.get(cell.fraction, math.nan)
            writer.writerow(
                [cell.fraction, cell.policy, f"{cell.mean_acc:.6f}", f"{cell.std_acc:.6f}",
                 f"{delta:.6f}" if not math.isnan(delta) else ""]
            )
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(exist_ok=True)
    for i, run in enumerate(runs):
        with open(runs_dir / f"run_{i:03d}.json", "w", encoding="utf-8") as fh:
            json.dump(run, fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_ablation(
    knob: str,
    values: list[float],
    manifest: DatasetManifest,
    clips: list[MotionClip],
    skeleton: Skeleton,
    artifacts: dict[float, DiffusionArtifact],
    recognizer_cfg: RecognizerConfig,
    fractions: list[float],
    seeds: list[int],
    multiplier: int = 5,
    dropout: float = 0.2,
    tau: float = 20.0,
    train_split: float = 0.8,
    split_seed: int = 123,
    retrain: tuple[ModelConfig, NoiseSchedule, TrainSettings] | None = None,
    out_dir: str | Path | None = None,
) -> tuple[list[ProtocolCell], dict]:
    """Sweep one generation knob; rows = values, columns = fractions.

    dropout/tau reuse the supplied artifacts and regenerate synthetic data
    per value; lambda_cls retrains the generator per (value, fraction)
    using the ``retrain`` settings. For tau the side report records the
    acceptance rate of a shared candidate pool at every threshold, which
    is non-decreasing by construction of the retained set.
    """
    if knob not in ("dropout", "tau", "lambda_cls"):
        raise DataError(f"unknown ablation knob {knob!r}")
    if knob == "lambda_cls" and retrain is None:
        raise DataError("lambda_cls ablation needs retrain settings")

    from .dataset import encode_clips
    from .sampler import grm_distances, sample_loop

    clips_by_id = {c.id: c for c in clips}
    train_m, val_m = split_fraction(manifest, train_split, split_seed)
    val_clips = [clips_by_id[e.id] for e in val_m.clips]

    cells: list[ProtocolCell] = []
    side_report: dict = {"knob": knob, "values": list(values)}
    acceptance: dict[str, dict] = {}

    for fraction in fractions:
        subset_m = training_subset(manifest, fraction, train_split, split_seed)
        subset_clips = [clips_by_id[e.id] for e in subset_m.clips]

        if knob == "tau" and fraction in artifacts:
            # shared candidate pool -> exact acceptance-rate monotonicity
            artifact = artifacts[fraction]
            features = encode_clips(subset_clips, skeleton)
            refs = [normalize(f, artifact.stats) for f in features]
            pool_cfg = SamplingConfig(
                num_samples=max(32, 2 * multiplier * len(subset_clips)),
                label=0,
                frames=artifact.window,
                dropout_rate=dropout,
                grm_tau=float("inf"),
                seed=_cell_seed("pool", split_seed, fraction),
            )
            pool = sample_loop(artifact.model, artifact.schedule, pool_cfg)
            d = grm_distances(pool, refs)
            acceptance[str(fraction)] = {
                str(v): float(np.mean(d <= v)) for v in values
            }

        for value in values:
            if knob == "lambda_cls":
                model_cfg, schedule, base_settings = retrain
                settings = TrainSettings(
                    epochs=base_settings.epochs,
                    batch_size=base_settings.batch_size,
                    lr=base_settings.lr,
                    lambda_cls=float(value),
                    lr_decay_gamma=base_settings.lr_decay_gamma,
                    lr_milestones=base_settings.lr_milestones,
                    window=base_settings.window,
                    seed=base_settings.seed,
                )
                features = encode_clips(subset_clips, skeleton)
                from .features import fit_normalization

                stats = fit_normalization(features)
                normalized = [normalize(f, stats) for f in features]
                labels = np.array([c.label for c in subset_clips])
                result = train_denoiser(normalized, labels, model_cfg, schedule, settings)
                artifact = DiffusionArtifact(
                    model=result.model, schedule=schedule, stats=stats, window=settings.window
                )
                cell_dropout, cell_tau = dropout, tau
            else:
                if fraction not in artifacts:
                    raise DataError(f"no diffusion checkpoint supplied for fraction {fraction}")
                artifact = artifacts[fraction]
                cell_dropout = float(value) if knob == "dropout" else dropout
                cell_tau = float(value) if knob == "tau" else tau

            synthetic, _ = synthesize_for_subset(
                artifact, subset_clips, skeleton, multiplier,
                cell_dropout, cell_tau, seed=_cell_seed("abl", split_seed, fraction, value),
            )
            accs = _run_cell(
                subset_clips, val_clips, AugPolicy(kind="synthetic", multiplier=multiplier),
                synthetic, recognizer_cfg, skeleton, seeds,
            )
            cells.append(
                ProtocolCell(fraction=fraction, policy=f"{knob}={value}",
                             accuracies=accs, knob_value=float(value))
            )

    if knob == "tau":
        side_report["acceptance_rates"] = acceptance
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "ablation_results.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([knob] + [f"frac_{f}" for f in fractions])
            for value in values:
                row = [value]
                for fraction in fractions:
                    match = [
                        c for c in cells
                        if c.knob_value == float(value) and c.fraction == fraction
                    ]
                    row.append(f"{match[0].mean_acc:.6f}" if match else "")
                writer.writerow(row)
        with open(out_dir / "ablation_side_report.json", "w", encoding="utf-8") as fh:
            json.dump(side_report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return cells, side_report
