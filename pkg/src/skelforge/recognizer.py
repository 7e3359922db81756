"""Compact spatio-temporal graph-convolutional action classifier.

Serves two roles: the downstream evaluation model and the embedding
extractor behind the generative-quality metrics. Inputs are global joint
positions; preprocessing root-centers each window on its first frame and
removes the initial facing yaw, so any global yaw rotation of a clip maps
to the identical network input.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .dataset import MotionClip
from .errors import DataError
from .features import _yaw_matrices, facing_yaw
from .skeleton import ROOT, Skeleton

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecognizerConfig:
    num_classes: int
    channels: tuple[int, ...] = (32, 64, 128)
    temporal_kernel: int = 9
    window: int = 48
    epochs: int = 40
    lr: float = 1e-3
    batch_size: int = 32

    @property
    def embedding_dim(self) -> int:
        return self.channels[-1]

    def to_json(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "channels": list(self.channels),
            "temporal_kernel": self.temporal_kernel,
            "window": self.window,
            "epochs": self.epochs,
            "lr": self.lr,
            "batch_size": self.batch_size,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RecognizerConfig":
        data = dict(data)
        data["channels"] = tuple(data["channels"])
        return cls(**data)


@dataclass(frozen=True)
class AugPolicy:
    """Classical or synthetic augmentation policy.

    kind: none | gaussian_noise | scaling | rotating | synthetic.
    sigma in meters; scale_range multiplies coordinates about the per-frame
    root; yaw_range rotates the whole clip about the vertical axis through
    the first-frame root; multiplier is the synthetic-to-real ratio.
    """

    kind: str = "none"
    sigma: float = 0.01
    scale_range: tuple[float, float] = (0.9, 1.1)
    yaw_range: float = math.pi
    multiplier: int = 5

    def __post_init__(self) -> None:
        if self.kind not in ("none", "gaussian_noise", "scaling", "rotating", "synthetic"):
            raise DataError(f"unknown augmentation kind {self.kind!r}")
        if self.sigma < 0:
            raise DataError("sigma must be >= 0")
        if self.kind == "synthetic" and self.multiplier < 1:
            raise DataError("synthetic multiplier must be >= 1")


def normalized_adjacency(skeleton: Skeleton) -> np.ndarray:
    """Symmetric degree-normalized adjacency with self loops."""
    n = skeleton.joint_count
    adj = np.eye(n)
    for j in range(1, n):
        p = int(skeleton.parent[j])
        adj[j, p] = adj[p, j] = 1.0
    deg = adj.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return adj * inv_sqrt[:, None] * inv_sqrt[None, :]


def classical_augment(frames: np.ndarray, policy: AugPolicy, rng: np.random.Generator) -> np.ndarray:
    """Apply one random draw of a classical perturbation to a clip."""
    frames = np.asarray(frames, dtype=np.float64)
    if policy.kind == "none":
        return frames
    if policy.kind == "gaussian_noise":
        if policy.sigma == 0.0:
            return frames
        return frames + rng.normal(0.0, policy.sigma, size=frames.shape)
    if policy.kind == "scaling":
        lo, hi = policy.scale_range
        if lo == hi == 1.0:
            return frames
        factor = rng.uniform(lo, hi)
        root = frames[:, ROOT:ROOT + 1]
        return root + factor * (frames - root)
    if policy.kind == "rotating":
        if policy.yaw_range == 0.0:
            return frames
        yaw = rng.uniform(-policy.yaw_range, policy.yaw_range)
        rot = _yaw_matrices(np.array(yaw))
        pivot = frames[0, ROOT] * np.array([1.0, 0.0, 1.0])
        return (frames - pivot) @ rot.T + pivot
    raise DataError(f"classical_augment cannot apply kind {policy.kind!r}")


def preprocess_positions(frames: np.ndarray, window: int, start: int = 0) -> np.ndarray:
    """Window, root-center, and yaw-normalize a clip -> (3, window, 22).

    The window is translated so the first frame's root sits at the origin
    of the ground plane and rotated so its initial facing is +z.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[0] >= window:
        frames = frames[start:start + window]
    else:
        pad = np.repeat(frames[-1:], window - frames.shape[0], axis=0)
        frames = np.concatenate([frames, pad], axis=0)
    origin = frames[0, ROOT] * np.array([1.0, 0.0, 1.0])
    yaw0 = facing_yaw(frames[:1])[0]
    inv = _yaw_matrices(np.array(-yaw0))
    aligned = (frames - origin) @ inv.T
    return aligned.transpose(2, 0, 1)  # (xyz, T, V)


class _GraphBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int):
        super().__init__()
        self.spatial = nn.Conv2d(c_in, c_out, kernel_size=1)
        self.temporal = nn.Conv2d(
            c_out, c_out, kernel_size=(kernel, 1),
            padding=(kernel // 2, 0), stride=(stride, 1),
        )
        self.bn = nn.BatchNorm2d(c_out)
        self.relu = nn.ReLU()

    def forward(self, x: torch.Tensor, adjacency: torch.Tensor) -> torch.Tensor:
        x = torch.einsum("nctv,vw->nctw", x, adjacency)
        x = self.relu(self.spatial(x))
        return self.relu(self.bn(self.temporal(x)))


class SkeletonRecognizer(nn.Module):
    """Three graph-conv stages, global average pooling, linear classifier.

    The pooled penultimate vector doubles as the metric embedding space.
    """

    def __init__(self, config: RecognizerConfig, skeleton: Skeleton):
        super().__init__()
        self.config = config
        self.register_buffer(
            "adjacency", torch.from_numpy(normalized_adjacency(skeleton)).to(torch.float32)
        )
        blocks = []
        c_in = 3
        for i, c_out in enumerate(config.channels):
            stride = 1 if i == 0 else 2
            blocks.append(_GraphBlock(c_in, c_out, config.temporal_kernel, stride))
            c_in = c_out
        self.blocks = nn.ModuleList(blocks)
        self.fc = nn.Linear(config.embedding_dim, config.num_classes)
        self.is_trained = False

    def forward(self, x: torch.Tensor, return_embedding: bool = False):
        for block in self.blocks:
            x = block(x, self.adjacency)
        emb = x.mean(dim=(2, 3))
        logits = self.fc(emb)
        if return_embedding:
            return logits, emb
        return logits


def _training_tensors(
    clips: list[np.ndarray],
    window: int,
    policy: AugPolicy,
    rng_crop: np.random.Generator,
    rng_aug: np.random.Generator,
) -> torch.Tensor:
    batches = []
    for frames in clips:
        if policy.kind in ("gaussian_noise", "scaling", "rotating"):
            frames = classical_augment(frames, policy, rng_aug)
        max_start = max(0, frames.shape[0] - window)
        start = int(rng_crop.integers(0, max_start + 1))
        batches.append(preprocess_positions(frames, window, start=start))
    return torch.from_numpy(np.stack(batches).astype(np.float32))


def train_recognizer(
    clips: list[MotionClip],
    config: RecognizerConfig,
    skeleton: Skeleton,
    policy: AugPolicy | None = None,
    synthetic: list[MotionClip] | None = None,
    seed: int = 0,
) -> tuple[SkeletonRecognizer, list[dict]]:
    """Train the classifier on joint-position clips.

    Classical policies redraw their perturbation per epoch and sample;
    ``synthetic`` clips (already generated) are concatenated to the real
    set when the policy kind is "synthetic".
    """
    policy = policy or AugPolicy()
    data = list(clips)
    if policy.kind == "synthetic":
        if synthetic is None:
            raise DataError("synthetic policy requires generated clips")
        # an empty list is a legitimate generation shortfall; train on real only
        data = data + list(synthetic)
    if not data:
        raise DataError("training set is empty")
    present = {c.label for c in data}
    missing = sorted(set(range(config.num_classes)) - present)
    if missing:
        raise DataError(f"classes absent from the training set: {missing}")

    frames_list = [c.frames.astype(np.float64) for c in data]
    labels = np.array([c.label for c in data], dtype=np.int64)

    torch.manual_seed(seed)
    model = SkeletonRecognizer(config, skeleton)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    loss_fn = nn.CrossEntropyLoss()
    rng_crop = np.random.default_rng(seed)
    rng_aug = np.random.default_rng((seed, 0xA46))

    n = len(data)
    history: list[dict] = []
    model.train()
    for epoch in range(config.epochs):
        order = rng_crop.permutation(n)
        total, correct = 0.0, 0
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            x = _training_tensors(
                [frames_list[i] for i in idx], config.window, policy, rng_crop, rng_aug,
            )
            y = torch.from_numpy(labels[idx])
            logits = model(x)
            loss = loss_fn(logits, y)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
            correct += int((logits.argmax(dim=1) == y).sum())
        history.append(
            {"epoch": epoch, "loss": total / n, "train_acc": correct / n}
        )
    model.eval()
    model.is_trained = True
    return model, history


def evaluate_accuracy(
    model: SkeletonRecognizer,
    clips: list[MotionClip],
    num_classes: int,
) -> tuple[float, np.ndarray]:
    """Top-1 accuracy plus the per-class confusion matrix (rows = truth)."""
    model.eval()
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    with torch.no_grad():
        for s in range(0, len(clips), 64):
            chunk = clips[s:s + 64]
            x = torch.from_numpy(
                np.stack(
                    [preprocess_positions(c.frames, model.config.window) for c in chunk]
                ).astype(np.float32)
            )
            pred = model(x).argmax(dim=1).numpy()
            for clip, p in zip(chunk, pred):
                confusion[clip.label, int(p)] += 1
    accuracy = float(np.trace(confusion)) / max(1, confusion.sum())
    return accuracy, confusion


def embed_clips(
    model: SkeletonRecognizer,
    clips: list[MotionClip],
) -> np.ndarray:
    """Penultimate-layer embeddings (post-pooling, pre-logits), one row per clip."""
    if not model.is_trained:
        raise DataError("recognizer is untrained; train or load a checkpoint first")
    model.eval()
    rows = []
    with torch.no_grad():
        for s in range(0, len(clips), 64):
            chunk = clips[s:s + 64]
            x = torch.from_numpy(
                np.stack(
                    [preprocess_positions(c.frames, model.config.window) for c in chunk]
                ).astype(np.float32)
            )
            _, emb = model(x, return_embedding=True)
            rows.append(emb.numpy().astype(np.float64))
    return np.concatenate(rows, axis=0)
