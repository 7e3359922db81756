"""Iterative label-conditioned generation plus post-hoc fidelity filtering.

The sampling loop predicts the clean sequence at every step and re-noises
it one step back down the chain. Two knobs shape the output distribution:
sampling-time dropout inside the decoder stack (diversity) and the
refinement filter that discards candidates whose distance to the nearest
same-class real clip exceeds a threshold (fidelity). An optional
classifier-guidance term shifts the clean prediction along the gradient of
the model's own class log-probability.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .diffusion import NoiseSchedule, posterior_step
from .errors import NumericError
from .features import FEATURE_WIDTH

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplingConfig:
    num_samples: int
    label: int
    frames: int = 48
    dropout_rate: float = 0.0
    grm_tau: float = 20.0  # math.inf disables filtering
    max_oversample_rounds: int = 10
    guidance_scale: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if not self.grm_tau > 0.0:
            raise ValueError("grm_tau must be positive")

    def digest(self) -> str:
        payload = json.dumps(
            {
                "num_samples": self.num_samples,
                "label": self.label,
                "frames": self.frames,
                "dropout_rate": self.dropout_rate,
                "grm_tau": self.grm_tau,
                "max_oversample_rounds": self.max_oversample_rounds,
                "guidance_scale": self.guidance_scale,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class GeneratedBatch:
    """Retained samples in normalized feature space."""

    features: np.ndarray  # (N, frames, 263)
    labels: np.ndarray  # (N,)
    grm_distances: np.ndarray  # (N,)
    provenance: dict
    rejection_rate: float = 0.0
    shortfall: bool = False


def sample_loop(
    model,
    schedule: NoiseSchedule,
    config: SamplingConfig,
    generator: torch.Generator | None = None,
    num_samples: int | None = None,
) -> np.ndarray:
    """Run the full reverse chain; returns (N, frames, 263) raw candidates.

    The model only needs a ``forward(x_t, t, labels, dropout_override=...,
    generator=...)`` returning (x0_hat, logits); stubs work for plumbing
    tests.
    """
    n = num_samples if num_samples is not None else config.num_samples
    gen = generator or torch.Generator().manual_seed(config.seed)
    x = torch.randn((n, config.frames, FEATURE_WIDTH), generator=gen)
    labels = torch.full((n,), config.label, dtype=torch.long)
    override = config.dropout_rate if config.dropout_rate > 0 else None
    for t in range(schedule.t_steps - 1, -1, -1):
        t_batch = torch.full((n,), t, dtype=torch.long)
        if config.guidance_scale > 0:
            x_in = x.detach().requires_grad_(True)
            x0_hat, logits = model.forward(
                x_in, t_batch, labels, dropout_override=override, generator=gen
            )
            logp = torch.log_softmax(logits, dim=-1)[
                torch.arange(n), labels
            ].sum()
            (grad,) = torch.autograd.grad(logp, x_in)
            x0_hat = x0_hat.detach() + config.guidance_scale * grad
        else:
            with torch.no_grad():
                x0_hat, _ = model.forward(
                    x, t_batch, labels, dropout_override=override, generator=gen
                )
        x = posterior_step(x.detach(), x0_hat, t, schedule, rng=gen)
        if not torch.isfinite(x).all():
            raise NumericError(f"non-finite sample state at step {t}")
    return x.numpy().astype(np.float64)


def _align_reference(reference: np.ndarray, frames: int) -> np.ndarray:
    """Crop the reference to the candidate length from frame 0, padding by
    last-frame repetition when shorter."""
    ref = np.asarray(reference, dtype=np.float64)
    if ref.shape[0] >= frames:
        return ref[:frames]
    pad = np.repeat(ref[-1:], frames - ref.shape[0], axis=0)
    return np.concatenate([ref, pad], axis=0)


def grm_distances(candidates: np.ndarray, references: list[np.ndarray]) -> np.ndarray:
    """Min over references of the frame-averaged L2 deviation per candidate."""
    if not references:
        raise ValueError("reference set is empty")
    cands = np.asarray(candidates, dtype=np.float64)
    frames = cands.shape[1]
    refs = np.stack([_align_reference(r, frames) for r in references])
    # (N, R, T): per-frame L2 between candidate n and reference r
    diff = cands[:, None] - refs[None, :]
    per_frame = np.linalg.norm(diff, axis=-1)
    return per_frame.mean(axis=-1).min(axis=-1)


def grm_filter(
    candidates: np.ndarray,
    references: list[np.ndarray],
    tau: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Retained-candidate indices and all candidate distances.

    A candidate survives iff its deviation from the nearest same-class
    reference is at most tau.
    """
    d = grm_distances(candidates, references)
    return np.flatnonzero(d <= tau), d


def generate(
    model,
    schedule: NoiseSchedule,
    config: SamplingConfig,
    references: list[np.ndarray],
) -> GeneratedBatch:
    """Sample-and-filter until the quota of retained samples is met.

    Oversamples in rounds (doubling the request after the first round) up
    to ``max_oversample_rounds``; if the quota is still unmet the partial
    batch is returned with the shortfall flag set.
    """
    if not math.isinf(config.grm_tau) and not references:
        raise ValueError(f"no reference clips supplied for label {config.label}")
    gen = torch.Generator().manual_seed(config.seed)
    kept: list[np.ndarray] = []
    kept_d: list[float] = []
    produced = 0
    rounds = 0
    while sum(len(k) for k in kept) < config.num_samples and rounds < config.max_oversample_rounds:
        missing = config.num_samples - sum(len(k) for k in kept)
        request = missing if rounds == 0 else 2 * missing
        batch = sample_loop(model, schedule, config, generator=gen, num_samples=request)
        produced += request
        if math.isinf(config.grm_tau):
            idx = np.arange(len(batch))
            d = np.zeros(len(batch)) if not references else grm_distances(batch, references)
        else:
            idx, d = grm_filter(batch, references, config.grm_tau)
        kept.append(batch[idx])
        kept_d.extend(d[idx].tolist())
        rounds += 1

    retained = np.concatenate(kept, axis=0) if kept else np.zeros((0, config.frames, FEATURE_WIDTH))
    total_kept = len(retained)
    retained = retained[: config.num_samples]
    distances = np.asarray(kept_d[: config.num_samples], dtype=np.float64)
    shortfall = len(retained) < config.num_samples
    if shortfall:
        log.warning(
            "generation shortfall: %d/%d retained after %d rounds",
            len(retained), config.num_samples, rounds,
        )
    rejection = 0.0 if produced == 0 else (produced - total_kept) / produced
    return GeneratedBatch(
        features=retained,
        labels=np.full(len(retained), config.label, dtype=np.int64),
        grm_distances=distances,
        provenance={"config_digest": config.digest(), "seed": config.seed},
        rejection_rate=rejection,
        shortfall=shortfall,
    )
