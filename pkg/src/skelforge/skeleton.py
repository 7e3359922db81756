"""Fixed 22-joint skeleton definition.

The joint set, ordering and rest pose follow the common SMPL-style layout:
y is up, the rest pose faces +z and the character's left side is on +x.
All lengths are in meters.
"""

from dataclasses import dataclass, field

import numpy as np

JOINT_COUNT = 22
ROOT = 0

# Indices used to derive the ground-plane facing direction.
LEFT_HIP, RIGHT_HIP = 1, 2
LEFT_SHOULDER, RIGHT_SHOULDER = 16, 17

JOINT_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
)

_PARENTS = (
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19,
)

_OFFSETS = (
    (0.00, 0.00, 0.00),    # pelvis (root)
    (+0.10, -0.06, 0.00),  # left_hip
    (-0.10, -0.06, 0.00),  # right_hip
    (0.00, +0.11, 0.00),   # spine1
    (0.00, -0.40, 0.00),   # left_knee
    (0.00, -0.40, 0.00),   # right_knee
    (0.00, +0.12, 0.00),   # spine2
    (0.00, -0.41, 0.00),   # left_ankle
    (0.00, -0.41, 0.00),   # right_ankle
    (0.00, +0.13, 0.00),   # spine3
    (0.00, -0.05, +0.13),  # left_foot
    (0.00, -0.05, +0.13),  # right_foot
    (0.00, +0.10, 0.00),   # neck
    (+0.07, +0.07, 0.00),  # left_collar
    (-0.07, +0.07, 0.00),  # right_collar
    (0.00, +0.12, 0.00),   # head
    (+0.10, 0.00, 0.00),   # left_shoulder
    (-0.10, 0.00, 0.00),   # right_shoulder
    (+0.26, 0.00, 0.00),   # left_elbow
    (-0.26, 0.00, 0.00),   # right_elbow
    (+0.25, 0.00, 0.00),   # left_wrist
    (-0.25, 0.00, 0.00),   # right_wrist
)

# Rest pelvis height that puts the foot joints on the ground plane.
REST_ROOT_HEIGHT = 0.92


@dataclass(frozen=True)
class Skeleton:
    """Kinematic tree: parent indices plus rest-pose bone offsets.

    ``parent[j]`` is the parent joint of j (-1 for the single root) and
    ``bone_offsets[j]`` is j's translation from its parent in the rest pose.
    ``foot_joint_ids`` are the joints used for foot-contact detection.
    """

    parent: np.ndarray
    bone_offsets: np.ndarray
    foot_joint_ids: tuple[int, ...] = (7, 10, 8, 11)
    joint_count: int = field(default=JOINT_COUNT)

    def __post_init__(self) -> None:
        parent = np.asarray(self.parent, dtype=np.int64)
        offsets = np.asarray(self.bone_offsets, dtype=np.float64)
        if parent.shape != (self.joint_count,):
            raise ValueError(f"parent must have shape ({self.joint_count},)")
        if offsets.shape != (self.joint_count, 3):
            raise ValueError(f"bone_offsets must have shape ({self.joint_count}, 3)")
        roots = np.flatnonzero(parent < 0)
        if roots.size != 1 or roots[0] != ROOT:
            raise ValueError("parent array must have exactly one root at index 0")
        for j in range(self.joint_count):
            # walk to the root; a cycle would loop longer than the joint count
            seen = 0
            k = j
            while parent[k] >= 0:
                k = int(parent[k])
                seen += 1
                if seen > self.joint_count:
                    raise ValueError(f"parent array contains a cycle through joint {j}")
        lengths = np.linalg.norm(offsets[1:], axis=1)
        if np.any(lengths <= 0.0):
            raise ValueError("non-root bone offsets must have positive length")
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "bone_offsets", offsets)

    def rest_pose(self, root_height: float = REST_ROOT_HEIGHT) -> np.ndarray:
        """Global joint positions of the rest pose with the pelvis at the
        given height above the origin."""
        pos = np.zeros((self.joint_count, 3), dtype=np.float64)
        pos[ROOT] = (0.0, root_height, 0.0)
        for j in range(1, self.joint_count):
            pos[j] = pos[self.parent[j]] + self.bone_offsets[j]
        return pos

    def topological_order(self) -> list[int]:
        """Joint indices ordered parents-before-children."""
        order: list[int] = []
        pending = list(range(self.joint_count))
        placed = set()
        while pending:
            for j in list(pending):
                p = int(self.parent[j])
                if p < 0 or p in placed:
                    order.append(j)
                    placed.add(j)
                    pending.remove(j)
        return order


def default_skeleton() -> Skeleton:
    """The fixed SMPL-style 22-joint skeleton used throughout."""
    return Skeleton(parent=np.array(_PARENTS), bone_offsets=np.array(_OFFSETS))
