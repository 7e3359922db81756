"""Per-frame 263-dimensional motion feature codec.

A clip of F global joint-position frames is encoded into F-1 feature rows.
Channel layout (fixed order, total 263):

    [0]        root yaw angular velocity (radians / frame)
    [1:3]      root ground-plane linear velocity in the root's yaw-aligned
               local frame, ordered (forward, lateral)
    [3]        root height (absolute y of the pelvis)
    [4:67]     yaw-aligned root-relative positions of the 21 non-root joints
               (x and z relative to the root, y absolute)
    [67:193]   6D bone rotations for the 21 non-root joints (first two
               columns of the rotation taking the rest-pose bone direction
               to the observed yaw-aligned bone direction)
    [193:259]  local velocities of all 22 joints (frame differences rotated
               into the current yaw frame)
    [259:263]  foot-contact indicators (1 when the foot joint moves slower
               than the contact threshold)

Feature row f is built from input frames f and f+1; positional channels
refer to frame f, so decoding reproduces the first F-1 input frames.
"""

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .skeleton import (
    LEFT_HIP,
    LEFT_SHOULDER,
    RIGHT_HIP,
    RIGHT_SHOULDER,
    ROOT,
    Skeleton,
)

FEATURE_WIDTH = 263

ROOT_YAW_VEL = slice(0, 1)
ROOT_LIN_VEL = slice(1, 3)
ROOT_HEIGHT = slice(3, 4)
RIC_POSITIONS = slice(4, 67)
BONE_ROT6D = slice(67, 193)
LOCAL_VEL = slice(193, 259)
FOOT_CONTACT = slice(259, 263)

# Foot joints slower than this (meters/frame) count as in ground contact.
CONTACT_SPEED_THRESHOLD = 2e-3

_FACING_EPS = 1e-6


class DegenerateFacingError(ValueError):
    """Raised when the ground-plane facing direction vanishes."""

    def __init__(self, frame: int):
        self.frame = frame
        super().__init__(f"degenerate facing direction at frame {frame}")


class RootPose(NamedTuple):
    """Ground-plane root state used to seed feature decoding."""

    x: float = 0.0
    z: float = 0.0
    yaw: float = 0.0


def _yaw_matrices(yaw: np.ndarray) -> np.ndarray:
    """Rotation matrices about +y; R(yaw) maps local +z to the facing
    direction (sin yaw, 0, cos yaw)."""
    c, s = np.cos(yaw), np.sin(yaw)
    out = np.zeros(yaw.shape + (3, 3), dtype=np.float64)
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


def wrap_angle(a: np.ndarray) -> np.ndarray:
    """Wrap angles to (-pi, pi]."""
    return np.asarray(a) - 2.0 * np.pi * np.round(np.asarray(a) / (2.0 * np.pi))


def facing_yaw(frames: np.ndarray) -> np.ndarray:
    """Per-frame ground-plane facing angle from the hip and shoulder lines.

    The across vector (left minus right, hips plus shoulders) is projected to
    the ground plane; the facing direction is across x up. Returns the yaw
    angle measured from +z about +y.
    """
    frames = np.asarray(frames, dtype=np.float64)
    across = (
        frames[:, LEFT_HIP] - frames[:, RIGHT_HIP]
        + frames[:, LEFT_SHOULDER] - frames[:, RIGHT_SHOULDER]
    )
    across[:, 1] = 0.0
    norms = np.linalg.norm(across, axis=1)
    bad = np.flatnonzero(norms < _FACING_EPS)
    if bad.size:
        raise DegenerateFacingError(int(bad[0]))
    across /= norms[:, None]
    # forward = across x up with up = (0, 1, 0)
    forward = np.stack(
        [-across[:, 2], np.zeros(len(across)), across[:, 0]], axis=1
    )
    return np.arctan2(forward[:, 0], forward[:, 2])


def _shortest_arc_rotations(rest_dir: np.ndarray, bone_dir: np.ndarray) -> np.ndarray:
    """Minimal rotations taking each rest direction onto each bone direction.

    rest_dir: (J, 3) unit vectors; bone_dir: (F, J, 3) unit vectors.
    Returns (F, J, 3, 3) proper rotation matrices. Antiparallel pairs fall
    back to a half-turn about a deterministic perpendicular axis.
    """
    F, J, _ = bone_dir.shape
    u = np.broadcast_to(rest_dir, (F, J, 3))
    c = np.einsum("fjk,fjk->fj", u, bone_dir)
    v = np.cross(u, bone_dir)
    eye = np.broadcast_to(np.eye(3), (F, J, 3, 3))

    vx = np.zeros((F, J, 3, 3), dtype=np.float64)
    vx[..., 0, 1] = -v[..., 2]
    vx[..., 0, 2] = v[..., 1]
    vx[..., 1, 0] = v[..., 2]
    vx[..., 1, 2] = -v[..., 0]
    vx[..., 2, 0] = -v[..., 1]
    vx[..., 2, 1] = v[..., 0]

    # Rodrigues: R = I + [v]x + [v]x^2 / (1 + c), valid away from c = -1.
    denom = np.where(c > -1.0 + 1e-9, 1.0 + c, 1.0)
    rot = eye + vx + np.einsum("fjab,fjbc->fjac", vx, vx) / denom[..., None, None]

    anti = c <= -1.0 + 1e-9
    if np.any(anti):
        fi, ji = np.nonzero(anti)
        for f, j in zip(fi, ji):
            axis = np.cross(u[f, j], np.array([1.0, 0.0, 0.0]))
            if np.linalg.norm(axis) < 1e-8:
                axis = np.cross(u[f, j], np.array([0.0, 1.0, 0.0]))
            axis /= np.linalg.norm(axis)
            # half turn about the perpendicular axis: R = 2 aa^T - I
            rot[f, j] = 2.0 * np.outer(axis, axis) - np.eye(3)
    return rot


def encode_features(frames: np.ndarray, skeleton: Skeleton) -> np.ndarray:
    """Encode F global-position frames (F, 22, 3) into (F-1, 263) features."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[1:] != (skeleton.joint_count, 3):
        raise ValueError(f"frames must have shape (F, {skeleton.joint_count}, 3)")
    if frames.shape[0] < 2:
        raise ValueError("encoding requires at least 2 frames")
    if not np.isfinite(frames).all():
        raise ValueError("frames contain non-finite values")

    F = frames.shape[0]
    yaw = facing_yaw(frames)
    inv = _yaw_matrices(-yaw)  # world -> yaw-aligned local, per frame

    root = frames[:, ROOT]
    out = np.zeros((F - 1, FEATURE_WIDTH), dtype=np.float64)

    out[:, 0] = wrap_angle(np.diff(yaw))

    root_delta = root[1:] - root[:-1]
    local_delta = np.einsum("fab,fb->fa", inv[:-1], root_delta)
    out[:, ROOT_LIN_VEL] = local_delta[:, [2, 0]]  # (forward, lateral)
    out[:, 3] = root[:-1, 1]

    rel = frames - root[:, None, :] * np.array([1.0, 0.0, 1.0])
    ric = np.einsum("fab,fjb->fja", inv, rel)
    out[:, RIC_POSITIONS] = ric[:-1, 1:].reshape(F - 1, 63)

    bone_vec = frames[:, 1:] - frames[:, skeleton.parent[1:]]
    bone_local = np.einsum("fab,fjb->fja", inv, bone_vec)
    norms = np.linalg.norm(bone_local, axis=2, keepdims=True)
    bone_dir = bone_local / np.maximum(norms, 1e-12)
    rest_dir = skeleton.bone_offsets[1:] / np.linalg.norm(
        skeleton.bone_offsets[1:], axis=1, keepdims=True
    )
    rot = _shortest_arc_rotations(rest_dir, bone_dir[:-1])
    out[:, BONE_ROT6D] = rot[..., :2].transpose(0, 1, 3, 2).reshape(F - 1, 126)

    joint_delta = frames[1:] - frames[:-1]
    local_vel = np.einsum("fab,fjb->fja", inv[:-1], joint_delta)
    out[:, LOCAL_VEL] = local_vel.reshape(F - 1, 66)

    foot_speed = np.linalg.norm(
        joint_delta[:, list(skeleton.foot_joint_ids)], axis=2
    )
    out[:, FOOT_CONTACT] = (foot_speed < CONTACT_SPEED_THRESHOLD).astype(np.float64)
    return out


def decode_features(
    features: np.ndarray,
    skeleton: Skeleton,
    initial_root: RootPose | None = None,
) -> np.ndarray:
    """Decode (K, 263) features back to global joint positions (K, 22, 3).

    Integrates yaw and ground-plane velocities to recover the root
    trajectory, then places the root-relative positions into the global
    frame. Rotation and contact channels are not needed for positions.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != FEATURE_WIDTH:
        raise ValueError(f"features must have shape (K, {FEATURE_WIDTH})")
    if not np.isfinite(features).all():
        raise ValueError("features contain non-finite values")
    pose = initial_root or RootPose()

    K = features.shape[0]
    yaw = np.empty(K, dtype=np.float64)
    yaw[0] = pose.yaw
    if K > 1:
        yaw[1:] = pose.yaw + np.cumsum(features[:-1, 0])
    rot = _yaw_matrices(yaw)  # local -> world, per frame

    root_xz = np.empty((K, 2), dtype=np.float64)
    root_xz[0] = (pose.x, pose.z)
    if K > 1:
        step_local = np.zeros((K - 1, 3), dtype=np.float64)
        step_local[:, 2] = features[:-1, 1]  # forward
        step_local[:, 0] = features[:-1, 2]  # lateral
        step_world = np.einsum("fab,fb->fa", rot[:-1], step_local)
        root_xz[1:] = root_xz[0] + np.cumsum(step_world[:, [0, 2]], axis=0)

    ric = features[:, RIC_POSITIONS].reshape(K, 21, 3)
    joints = np.einsum("fab,fjb->fja", rot, ric)
    joints[:, :, 0] += root_xz[:, 0:1]
    joints[:, :, 2] += root_xz[:, 1:2]

    out = np.empty((K, skeleton.joint_count, 3), dtype=np.float64)
    out[:, ROOT, 0] = root_xz[:, 0]
    out[:, ROOT, 1] = features[:, 3]
    out[:, ROOT, 2] = root_xz[:, 1]
    out[:, 1:] = joints
    return out


def initial_root_pose(frames: np.ndarray) -> RootPose:
    """Root pose of the first frame, suitable for an exact decode."""
    frames = np.asarray(frames, dtype=np.float64)
    yaw = facing_yaw(frames[:1])[0]
    return RootPose(x=float(frames[0, ROOT, 0]), z=float(frames[0, ROOT, 2]), yaw=float(yaw))


@dataclass(frozen=True)
class NormalizationStats:
    """Per-channel mean and std over all frames of a feature collection."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != (FEATURE_WIDTH,) or std.shape != (FEATURE_WIDTH,):
            raise ValueError(f"stats must be {FEATURE_WIDTH}-vectors")
        if not (np.isfinite(mean).all() and np.isfinite(std).all()):
            raise ValueError("stats contain non-finite values")
        if np.any(std < STD_FLOOR):
            raise ValueError(f"std entries must be >= {STD_FLOOR}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


# Constant channels would otherwise divide by zero.
STD_FLOOR = 1e-6


def fit_normalization(feature_sets: Iterable[np.ndarray]) -> NormalizationStats:
    """Population mean/std per channel over every frame of every clip."""
    stacked = [np.asarray(f, dtype=np.float64) for f in feature_sets]
    if not stacked:
        raise ValueError("cannot fit normalization on an empty collection")
    allframes = np.concatenate(stacked, axis=0)
    mean = allframes.mean(axis=0)
    std = allframes.std(axis=0)  # population convention (ddof=0)
    return NormalizationStats(mean=mean, std=np.maximum(std, STD_FLOOR))


def normalize(features: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return (np.asarray(features, dtype=np.float64) - stats.mean) / stats.std


def denormalize(features: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return np.asarray(features, dtype=np.float64) * stats.std + stats.mean


def crop_window(features: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random contiguous window of the given length.

    Clips shorter than the window are padded by repeating the final frame.
    """
    if length < 1:
        raise ValueError("window length must be >= 1")
    features = np.asarray(features)
    F = features.shape[0]
    if F >= length:
        start = int(rng.integers(0, F - length + 1))
        return features[start:start + length].copy()
    pad = np.repeat(features[-1:], length - F, axis=0)
    return np.concatenate([features, pad], axis=0)
