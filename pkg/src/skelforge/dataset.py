"""Motion clip containers and the on-disk dataset format.

A dataset directory holds ``manifest.json`` plus one raw float32 file per
clip (little-endian, row-major ``[frames][22][3]``, extension ``.f32``).
Feature caches reuse the same container with ``[frames][263]`` rows.
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .features import FEATURE_WIDTH, encode_features
from .skeleton import JOINT_COUNT, Skeleton

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class MotionClip:
    """One skeleton sequence: global joint positions plus an action label."""

    id: str
    label: int
    frames: np.ndarray  # (F, 22, 3) float32

    def __post_init__(self) -> None:
        frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if frames.ndim != 3 or frames.shape[1:] != (JOINT_COUNT, 3):
            raise DataError(f"clip {self.id}: frames must be (F, {JOINT_COUNT}, 3)")
        if frames.shape[0] < 1:
            raise DataError(f"clip {self.id}: needs at least one frame")
        if not np.isfinite(frames).all():
            raise DataError(f"clip {self.id}: non-finite coordinates")
        self.frames = frames

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])


@dataclass(frozen=True)
class ClipEntry:
    id: str
    label: int
    num_frames: int
    path: str


@dataclass
class DatasetManifest:
    num_classes: int
    class_names: list[str]
    clips: list[ClipEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.class_names) != self.num_classes:
            raise DataError("class_names length must equal num_classes")
        for entry in self.clips:
            if not 0 <= entry.label < self.num_classes:
                raise DataError(f"clip {entry.id}: label {entry.label} out of range")

    def labels(self) -> np.ndarray:
        return np.array([c.label for c in self.clips], dtype=np.int64)

    def by_class(self) -> dict[int, list[ClipEntry]]:
        groups: dict[int, list[ClipEntry]] = {c: [] for c in range(self.num_classes)}
        for entry in self.clips:
            groups[entry.label].append(entry)
        return groups

    def to_json(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "class_names": list(self.class_names),
            "clips": [
                {"id": c.id, "label": c.label, "num_frames": c.num_frames, "path": c.path}
                for c in self.clips
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "DatasetManifest":
        return cls(
            num_classes=int(data["num_classes"]),
            class_names=[str(n) for n in data["class_names"]],
            clips=[
                ClipEntry(
                    id=str(c["id"]),
                    label=int(c["label"]),
                    num_frames=int(c["num_frames"]),
                    path=str(c["path"]),
                )
                for c in data["clips"]
            ],
        )


def write_f32(path: Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array, dtype="<f4")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(arr.tobytes())


def read_f32(path: Path, row_width: int) -> np.ndarray:
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % row_width != 0:
        raise DataError(f"{path}: size {raw.size} not a multiple of row width {row_width}")
    return raw.reshape(-1, row_width)


def save_dataset(directory: str | Path, manifest: DatasetManifest, clips: list[MotionClip]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    by_id = {c.id: c for c in clips}
    for entry in manifest.clips:
        clip = by_id[entry.id]
        write_f32(directory / entry.path, clip.frames.reshape(clip.num_frames, -1))
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(directory: str | Path) -> DatasetManifest:
    directory = Path(directory)
    path = directory / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"no {MANIFEST_NAME} in {directory}")
    with open(path, encoding="utf-8") as fh:
        manifest = DatasetManifest.from_json(json.load(fh))
    for entry in manifest.clips:
        clip_path = directory / entry.path
        if not clip_path.exists():
            raise DataError(f"missing clip file {clip_path}")
        expected = entry.num_frames * JOINT_COUNT * 3 * 4
        actual = clip_path.stat().st_size
        if actual != expected:
            raise DataError(
                f"{clip_path}: expected {expected} bytes for {entry.num_frames} frames, got {actual}"
            )
    return manifest


def load_clip(directory: str | Path, entry: ClipEntry) -> MotionClip:
    rows = read_f32(Path(directory) / entry.path, JOINT_COUNT * 3)
    return MotionClip(id=entry.id, label=entry.label, frames=rows.reshape(-1, JOINT_COUNT, 3))


def load_dataset(directory: str | Path) -> tuple[DatasetManifest, list[MotionClip]]:
    manifest = load_manifest(directory)
    clips = [load_clip(directory, entry) for entry in manifest.clips]
    return manifest, clips


def dataset_digest(directory: str | Path) -> str:
    """Content hash of a dataset directory (manifest plus clip payloads)."""
    directory = Path(directory)
    manifest = load_manifest(directory)
    h = hashlib.sha256()
    h.update(json.dumps(manifest.to_json(), sort_keys=True).encode())
    for entry in manifest.clips:
        h.update((directory / entry.path).read_bytes())
    return h.hexdigest()


def one_hot(label: int, num_classes: int) -> np.ndarray:
    if not 0 <= label < num_classes:
        raise DataError(f"label {label} outside [0, {num_classes})")
    vec = np.zeros(num_classes, dtype=np.float64)
    vec[label] = 1.0
    return vec


def split_fraction(
    manifest: DatasetManifest, fraction: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Stratified split: each class keeps ceil(fraction * class_size) clips.

    Deterministic per seed. Returns (subset, remainder); classes left empty
    in either half are logged as warnings rather than errors.
    """
    if not 0.0 < fraction <= 1.0:
        raise DataError(f"fraction must be in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    subset: list[ClipEntry] = []
    remainder: list[ClipEntry] = []
    for label in range(manifest.num_classes):
        entries = [c for c in manifest.clips if c.label == label]
        keep = math.ceil(fraction * len(entries))
        order = rng.permutation(len(entries))
        chosen = set(order[:keep].tolist())
        for i, entry in enumerate(entries):
            (subset if i in chosen else remainder).append(entry)
        if len(entries) and keep == 0:
            log.warning("split left class %d empty in the subset", label)
        if len(entries) and keep == len(entries) and fraction < 1.0:
            log.warning("split left class %d empty in the remainder", label)
    make = lambda clips: DatasetManifest(
        num_classes=manifest.num_classes,
        class_names=list(manifest.class_names),
        clips=clips,
    )
    return make(subset), make(remainder)


def feature_cache_dir(default: str | Path | None = None) -> Path | None:
    """Feature cache root; the SKELFORGE_CACHE env var overrides it."""
    env = os.environ.get("SKELFORGE_CACHE")
    if env:
        return Path(env)
    return Path(default) if default is not None else None


def encode_clips(
    clips: list[MotionClip],
    skeleton: Skeleton,
    cache_dir: str | Path | None = None,
) -> list[np.ndarray]:
    """Encode clips to 263-d features, optionally caching by content hash."""
    cache = feature_cache_dir(cache_dir)
    out: list[np.ndarray] = []
    for clip in clips:
        cached = None
        if cache is not None:
            digest = hashlib.sha256(clip.frames.tobytes()).hexdigest()
            cached = cache / f"{digest}.f32"
            if cached.exists():
                out.append(read_f32(cached, FEATURE_WIDTH).astype(np.float64))
                continue
        feats = encode_features(clip.frames, skeleton)
        if cached is not None:
            write_f32(cached, feats)
            feats = read_f32(cached, FEATURE_WIDTH).astype(np.float64)
        out.append(feats)
    return out
