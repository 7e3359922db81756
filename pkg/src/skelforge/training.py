"""Denoiser training loop.

Standard conditional-DDPM recipe: draw a batch of normalized feature
windows, draw per-example steps uniformly, corrupt with the closed-form
forward process, predict x0 and class logits, descend the combined loss
with Adam, decaying the learning rate by a fixed factor at milestone
epochs. Fully deterministic for a given seed.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .denoiser import Denoiser, ModelConfig, init_parameters
from .diffusion import NoiseSchedule, q_sample, training_loss
from .errors import NumericError
from .features import crop_window

log = logging.getLogger(__name__)


@dataclass
class TrainSettings:
    epochs: int = 60
    batch_size: int = 32
    lr: float = 3e-4
    lambda_cls: float = 0.1
    lr_decay_gamma: float = 0.1
    lr_milestones: tuple[float, ...] = (0.6, 0.85)  # fractions of total epochs
    window: int = 48
    seed: int = 0
    checkpoint_every: int = 0  # epochs; 0 disables periodic checkpoints
    log_every: int = 10

    def milestone_epochs(self) -> list[int]:
        return sorted({max(1, math.floor(f * self.epochs)) for f in self.lr_milestones})


@dataclass
class EpochRecord:
    epoch: int
    total: float
    rec: float
    cls: float
    lr: float

    def to_json(self) -> dict:
        return {
            "epoch": self.epoch,
            "total": self.total,
            "rec": self.rec,
            "cls": self.cls,
            "lr": self.lr,
        }


@dataclass
class TrainResult:
    model: Denoiser
    history: list[EpochRecord] = field(default_factory=list)


def _assemble_batch(
    features: list[np.ndarray],
    labels: np.ndarray,
    idx: np.ndarray,
    window: int,
    rng: np.random.Generator,
) -> tuple[torch.Tensor, torch.Tensor]:
    windows = np.stack([crop_window(features[i], window, rng) for i in idx])
    x0 = torch.from_numpy(windows.astype(np.float32))
    y = torch.from_numpy(labels[idx])
    return x0, y


def train_denoiser(
    features: list[np.ndarray],
    labels: np.ndarray,
    config: ModelConfig,
    schedule: NoiseSchedule,
    settings: TrainSettings,
    checkpoint_dir: str | Path | None = None,
) -> TrainResult:
    """Train from scratch on normalized per-clip features.

    `features` holds one (F_i, 263) array per clip, already normalized;
    `labels` the matching class indices. Aborts with NumericError if the
    loss goes non-finite.
    """
    if not features:
        raise ValueError("training requires a non-empty dataset")
    labels = np.asarray(labels, dtype=np.int64)
    model = init_parameters(config, settings.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=settings.lr)
    scheduler = torch.optim.lr_scheduler.MultiStepLR(
        optimizer, milestones=settings.milestone_epochs(), gamma=settings.lr_decay_gamma
    )
    rng = np.random.default_rng(settings.seed)
    gen = torch.Generator().manual_seed(settings.seed)

    n = len(features)
    steps_per_epoch = max(1, math.ceil(n / settings.batch_size))
    history: list[EpochRecord] = []
    global_step = 0
    for epoch in range(settings.epochs):
        order = rng.permutation(n)
        sums = np.zeros(3)
        for s in range(steps_per_epoch):
            if settings.batch_size > n:
                # tiny dataset: oversample clips (distinct windows / steps
                # per occurrence) so each batch still fills out
                idx = rng.integers(0, n, size=settings.batch_size)
            else:
                idx = order[s * settings.batch_size:(s + 1) * settings.batch_size]
            x0, y = _assemble_batch(features, labels, idx, settings.window, rng)
            t = torch.randint(0, schedule.t_steps, (len(idx),), generator=gen)
            eps = torch.randn(x0.shape, generator=gen)
            x_t = q_sample(x0, t, eps, schedule)

            x0_hat, logits = model.forward(x_t, t, y, train=True, generator=gen)
            total, rec, cls = training_loss(x0_hat, logits, x0, y, settings.lambda_cls)
            if not torch.isfinite(total):
                raise NumericError(
                    f"non-finite loss at step {global_step} "
                    f"(lr={optimizer.param_groups[0]['lr']:.3g}, "
                    f"rec={rec.item():.6g}, cls={cls.item():.6g})"
                )
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            sums += (total.item(), rec.item(), cls.item())
            global_step += 1

        record = EpochRecord(
            epoch=epoch,
            total=sums[0] / steps_per_epoch,
            rec=sums[1] / steps_per_epoch,
            cls=sums[2] / steps_per_epoch,
            lr=optimizer.param_groups[0]["lr"],
        )
        history.append(record)
        scheduler.step()
        if settings.log_every and (epoch + 1) % settings.log_every == 0:
            log.info(
                "epoch %d/%d total %.4f rec %.4f cls %.4f",
                epoch + 1, settings.epochs, record.total, record.rec, record.cls,
            )
        if (
            checkpoint_dir is not None
            and settings.checkpoint_every
            and (epoch + 1) % settings.checkpoint_every == 0
        ):
            from .checkpoint import save_denoiser

            save_denoiser(Path(checkpoint_dir) / f"epoch{epoch + 1:05d}.skdf", model)
    return TrainResult(model=model, history=history)


def evaluate_reconstruction_loss(
    model: Denoiser,
    features: list[np.ndarray],
    labels: np.ndarray,
    schedule: NoiseSchedule,
    window: int,
    seed: int = 0,
    t_grid: list[int] | None = None,
) -> float:
    """Deterministic reconstruction MSE over a fixed grid of steps.

    Every clip is paired with every step in the grid using seeded noise;
    useful as a reproducible training-quality measurement.
    """
    if t_grid is None:
        t_grid = list(range(0, schedule.t_steps, max(1, schedule.t_steps // 10)))
    rng = np.random.default_rng(seed)
    gen = torch.Generator().manual_seed(seed)
    labels = np.asarray(labels, dtype=np.int64)
    total, count = 0.0, 0
    with torch.no_grad():
        for t in t_grid:
            idx = np.arange(len(features))
            x0, y = _assemble_batch(features, labels, idx, window, rng)
            eps = torch.randn(x0.shape, generator=gen)
            x_t = q_sample(x0, torch.full((len(idx),), t, dtype=torch.long), eps, schedule)
            x0_hat, _ = model.forward(x_t, torch.full((len(idx),), t), y)
            total += float(torch.mean((x0_hat - x0) ** 2))
            count += 1
    return total / count
