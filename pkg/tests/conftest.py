"""Shared fixtures for the acceptance suite.

The expensive artifacts (toy dataset, trained recognizer, desk-scale
diffusion models) are session-scoped and built once; individual acceptance
criteria assert against them and their recorded wall-clock times.
"""

import time

import numpy as np
import pytest

from skelforge.dataset import encode_clips, split_fraction
from skelforge.denoiser import ModelConfig
from skelforge.diffusion import make_linear_schedule
from skelforge.features import fit_normalization, normalize
from skelforge.recognizer import RecognizerConfig, train_recognizer
from skelforge.skeleton import default_skeleton
from skelforge.toydata import generate_toy_dataset
from skelforge.training import TrainSettings, train_denoiser, evaluate_reconstruction_loss

DESK_MODEL = dict(d_model=128, layers=2, heads=4, max_frames=48, internal_dropout=0.0)
DESK_SCHEDULE = dict(t_steps=100, beta_start=1e-3, beta_end=0.1)
ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.fixture(scope="session")
def skeleton():
    return default_skeleton()


@pytest.fixture(scope="session")
def toy_data(skeleton):
    manifest, clips = generate_toy_dataset(skeleton, 3, 40, 64, seed=7)
    return manifest, clips


@pytest.fixture(scope="session")
def toy_split(toy_data):
    manifest, clips = toy_data
    by_id = {c.id: c for c in clips}
    train_m, val_m = split_fraction(manifest, 0.8, seed=123)
    train_clips = [by_id[e.id] for e in train_m.clips]
    val_clips = [by_id[e.id] for e in val_m.clips]
    return manifest, train_clips, val_clips


@pytest.fixture(scope="session")
def desk_schedule():
    return make_linear_schedule(**DESK_SCHEDULE)


@pytest.fixture(scope="session")
def trained_recognizer(skeleton, toy_split):
    _, train_clips, _ = toy_split
    config = RecognizerConfig(num_classes=3, epochs=40)
    model, _ = train_recognizer(train_clips, config, skeleton, seed=0)
    return model


@pytest.fixture(scope="session")
def desk_diffusion(skeleton, toy_split, desk_schedule):
    """Desk-profile generator trained on the full toy training split."""
    _, train_clips, _ = toy_split
    features = encode_clips(train_clips, skeleton)
    stats = fit_normalization(features)
    normalized = [normalize(f, stats) for f in features]
    labels = np.array([c.label for c in train_clips])
    config = ModelConfig(num_classes=3, **DESK_MODEL)
    settings = TrainSettings(
        epochs=2000, batch_size=32, lr=1e-3, lambda_cls=0.1, window=48,
        seed=0, log_every=0,
    )
    result = train_denoiser(normalized, labels, config, desk_schedule, settings)
    return {
        "model": result.model,
        "stats": stats,
        "normalized": normalized,
        "labels": labels,
        "schedule": desk_schedule,
        "train_clips": train_clips,
    }


@pytest.fixture(scope="session")
def overfit_run(skeleton, desk_schedule):
    """Criterion 6 artifact: desk model trained on 8 toy clips, timed."""
    _, clips = generate_toy_dataset(skeleton, 3, 3, 64, seed=1)
    clips = clips[:8]
    features = encode_clips(clips, skeleton)
    stats = fit_normalization(features)
    normalized = [normalize(f, stats) for f in features]
    labels = np.array([c.label for c in clips])
    config = ModelConfig(num_classes=3, **DESK_MODEL)
    settings = TrainSettings(
        epochs=2000, batch_size=32, lr=1e-3, lambda_cls=0.1, window=48,
        seed=0, log_every=0, lr_milestones=(0.7,),
    )
    start = time.time()
    result = train_denoiser(normalized, labels, config, desk_schedule, settings)
    rec = evaluate_reconstruction_loss(
        result.model, normalized, labels, desk_schedule, window=48, seed=0
    )
    wall = time.time() - start
    return {
        "model": result.model,
        "stats": stats,
        "normalized": normalized,
        "labels": labels,
        "schedule": desk_schedule,
        "rec_loss": rec,
        "train_seconds": wall,
        "steps": settings.epochs,
    }


@pytest.fixture(scope="session")
def fraction_benefit_run(skeleton, toy_split, desk_schedule):
    """Criterion 8 artifact: diffusion trained on the 10% subset, 5x
    synthetic augmentation, recognizers over 5 seeds for both policies."""
    from skelforge.protocol import DiffusionArtifact, synthesize_for_subset, training_subset
    from skelforge.recognizer import AugPolicy, evaluate_accuracy

    manifest, train_clips, val_clips = toy_split
    start = time.time()
    subset_m = training_subset(manifest, 0.1, train_split=0.8, split_seed=123)
    by_id = {c.id: c for c in train_clips}
    subset_clips = [by_id[e.id] for e in subset_m.clips]

    features = encode_clips(subset_clips, skeleton)
    stats = fit_normalization(features)
    normalized = [normalize(f, stats) for f in features]
    labels = np.array([c.label for c in subset_clips])
    config = ModelConfig(num_classes=3, **DESK_MODEL)
    settings = TrainSettings(
        epochs=2500, batch_size=32, lr=1e-3, lambda_cls=0.1, window=48,
        seed=0, log_every=0,
    )
    result = train_denoiser(normalized, labels, config, desk_schedule, settings)
    artifact = DiffusionArtifact(
        model=result.model, schedule=desk_schedule, stats=stats, window=48
    )
    synthetic, summary = synthesize_for_subset(
        artifact, subset_clips, skeleton, multiplier=5, dropout=0.2, tau=20.0, seed=81
    )

    rec_cfg = RecognizerConfig(num_classes=3, epochs=40)
    acc_none, acc_synth = [], []
    for seed in range(5):
        m_none, _ = train_recognizer(subset_clips, rec_cfg, skeleton, seed=seed)
        a, _ = evaluate_accuracy(m_none, val_clips, 3)
        m_syn, _ = train_recognizer(
            subset_clips, rec_cfg, skeleton,
            policy=AugPolicy(kind="synthetic", multiplier=5),
            synthetic=synthetic, seed=seed,
        )
        b, _ = evaluate_accuracy(m_syn, val_clips, 3)
        acc_none.append(a)
        acc_synth.append(b)
    return {
        "acc_none": acc_none,
        "acc_synth": acc_synth,
        "synthetic": synthetic,
        "generation_summary": summary,
        "subset_size": len(subset_clips),
        "wall_seconds": time.time() - start,
    }


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{name}: {ACCEPTANCE_RESULTS[name]}")
