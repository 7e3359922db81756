"""Procedural toy motion dataset.

Classes differ in root-trajectory pattern (straight walk, circular walk,
in-place squat) and in limb oscillation frequency/amplitude; every clip gets
random phase, tempo, amplitude and heading jitter so a class is a band of
motions rather than a single template. Deterministic for a fixed seed.
"""

import numpy as np

from .dataset import ClipEntry, DatasetManifest, MotionClip
from .errors import DataError
from .skeleton import REST_ROOT_HEIGHT, ROOT, Skeleton

MIN_FRAMES = 8

_TRAJ_KINDS = ("straight", "circle", "inplace")

# Oscillating joints: (joint id, rotation axis) - legs swing about x,
# arms about y (arm bones point along +-x in the rest pose).
_LEFT_HIP_J, _RIGHT_HIP_J = 1, 2
_LEFT_KNEE_J, _RIGHT_KNEE_J = 4, 5
_LEFT_SHOULDER_J, _RIGHT_SHOULDER_J = 16, 17
_LEFT_ELBOW_J, _RIGHT_ELBOW_J = 18, 19
_SPINE_J = 3


def _rot_axis(angles: np.ndarray, axis: int) -> np.ndarray:
    """Per-frame rotation matrices about a coordinate axis (0=x, 1=y, 2=z)."""
    c, s = np.cos(angles), np.sin(angles)
    out = np.zeros(angles.shape + (3, 3))
    i, j = [(1, 2), (2, 0), (0, 1)][axis]
    out[..., axis, axis] = 1.0
    out[..., i, i] = c
    out[..., i, j] = -s
    out[..., j, i] = s
    out[..., j, j] = c
    return out


def class_parameters(label: int) -> dict:
    """Deterministic kinematic parameters for a class index."""
    return {
        "traj": _TRAJ_KINDS[label % 3],
        "leg_freq": 0.040 + 0.016 * (label % 4) + 0.002 * label,
        "leg_amp": 0.45 + 0.10 * ((label + 1) % 3),
        "arm_amp": 0.50 + 0.15 * (label % 3),
        "speed": 0.018 + 0.007 * (label % 4),
        "turn": 0.020 + 0.004 * (label % 5),
        "squat_amp": 0.16 + 0.03 * (label % 3),
    }


def _synthesize_clip(
    skeleton: Skeleton, params: dict, frames: int, rng: np.random.Generator
) -> np.ndarray:
    phase = rng.uniform(0.0, 2.0 * np.pi)
    tempo = rng.uniform(0.8, 1.25)
    amp_scale = rng.uniform(0.8, 1.2)
    heading0 = rng.uniform(-np.pi, np.pi)
    start = rng.uniform(-0.5, 0.5, size=2)
    # smooth per-joint texture so clips within a class are not templates;
    # one frequency per axis keeps the clip's texture low-rank
    tex_amp = rng.uniform(0.004, 0.012, size=(skeleton.joint_count, 3))
    tex_freq = rng.uniform(0.02, 0.09, size=(1, 3))
    tex_phase = rng.uniform(0.0, 2.0 * np.pi, size=(skeleton.joint_count, 3))

    t = np.arange(frames, dtype=np.float64)
    theta = 2.0 * np.pi * params["leg_freq"] * tempo * t + phase
    leg_amp = params["leg_amp"] * amp_scale
    arm_amp = params["arm_amp"] * amp_scale

    if params["traj"] == "circle":
        heading = heading0 + params["turn"] * tempo * t
    else:
        heading = np.full(frames, heading0)

    speed = params["speed"] if params["traj"] != "inplace" else 0.0
    step = np.stack(
        [speed * np.sin(heading), np.zeros(frames), speed * np.cos(heading)], axis=1
    )
    root_pos = np.zeros((frames, 3))
    root_pos[:, 0] = start[0]
    root_pos[:, 2] = start[1]
    root_pos[1:] += np.cumsum(step[:-1], axis=0)

    if params["traj"] == "inplace":
        dip = params["squat_amp"] * amp_scale * 0.5 * (1.0 - np.cos(theta))
        root_pos[:, 1] = REST_ROOT_HEIGHT - dip
        knee_l = knee_r = params["squat_amp"] * 4.0 * 0.5 * (1.0 - np.cos(theta))
        hip_l = hip_r = -0.5 * knee_l
        arm_l = arm_amp * 0.4 * np.sin(theta)
        arm_r = -arm_l
    else:
        root_pos[:, 1] = REST_ROOT_HEIGHT + 0.015 * np.sin(2.0 * theta)
        hip_l = leg_amp * np.sin(theta)
        hip_r = leg_amp * np.sin(theta + np.pi)
        knee_l = 0.6 * leg_amp * 0.5 * (1.0 + np.cos(theta))
        knee_r = 0.6 * leg_amp * 0.5 * (1.0 + np.cos(theta + np.pi))
        arm_l = arm_amp * np.sin(theta + np.pi)
        arm_r = arm_amp * np.sin(theta)

    local = np.broadcast_to(np.eye(3), (frames, skeleton.joint_count, 3, 3)).copy()
    local[:, _LEFT_HIP_J] = _rot_axis(hip_l, 0)
    local[:, _RIGHT_HIP_J] = _rot_axis(hip_r, 0)
    local[:, _LEFT_KNEE_J] = _rot_axis(knee_l, 0)
    local[:, _RIGHT_KNEE_J] = _rot_axis(knee_r, 0)
    local[:, _LEFT_SHOULDER_J] = _rot_axis(arm_l, 1)
    local[:, _RIGHT_SHOULDER_J] = _rot_axis(-arm_r, 1)
    local[:, _LEFT_ELBOW_J] = _rot_axis(0.3 * arm_l, 1)
    local[:, _RIGHT_ELBOW_J] = _rot_axis(-0.3 * arm_r, 1)
    local[:, _SPINE_J] = _rot_axis(0.08 * np.sin(theta), 1)

    # forward kinematics; a child's offset is carried by its parent's rotation
    rot = np.empty((frames, skeleton.joint_count, 3, 3))
    pos = np.empty((frames, skeleton.joint_count, 3))
    rot[:, ROOT] = _rot_axis(heading, 1)
    pos[:, ROOT] = root_pos
    for j in skeleton.topological_order():
        if j == ROOT:
            continue
        p = int(skeleton.parent[j])
        rot[:, j] = rot[:, p] @ local[:, j]
        pos[:, j] = pos[:, p] + np.einsum("fab,b->fa", rot[:, p], skeleton.bone_offsets[j])

    texture = tex_amp * np.sin(
        2.0 * np.pi * tex_freq * t[:, None, None] + tex_phase
    )
    texture[:, ROOT] = 0.0
    return pos + texture


def generate_toy_dataset(
    skeleton: Skeleton,
    num_classes: int,
    clips_per_class: int,
    frames: int,
    seed: int,
) -> tuple[DatasetManifest, list[MotionClip]]:
    """Procedural dataset with class-distinct kinematics.

    Same seed -> byte-identical clips. Classes cycle through trajectory
    patterns and oscillation parameter bands; every clip carries its own
    phase/tempo/amplitude/heading jitter.
    """
    if num_classes < 2:
        raise DataError("toy dataset needs at least 2 classes")
    if clips_per_class < 1:
        raise DataError("clips_per_class must be >= 1")
    if frames < MIN_FRAMES:
        raise DataError(f"frames must be >= {MIN_FRAMES}")

    rng = np.random.default_rng(seed)
    class_names = [f"toy-{class_parameters(k)['traj']}-{k}" for k in range(num_classes)]
    clips: list[MotionClip] = []
    entries: list[ClipEntry] = []
    for label in range(num_classes):
        params = class_parameters(label)
        for i in range(clips_per_class):
            clip_id = f"c{label:02d}_{i:04d}"
            frames_arr = _synthesize_clip(skeleton, params, frames, rng)
            clips.append(MotionClip(id=clip_id, label=label, frames=frames_arr))
            entries.append(
                ClipEntry(id=clip_id, label=label, num_frames=frames, path=f"clips/{clip_id}.f32")
            )
    manifest = DatasetManifest(
        num_classes=num_classes, class_names=class_names, clips=entries
    )
    return manifest, clips
