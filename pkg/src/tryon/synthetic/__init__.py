"""Procedural articulated-avatar world: paired ground truth for training
and a brute-force oracle for every pipeline claim."""

from .avatar import (
    JOINT_NAMES,
    LIMB_BONES,
    AvatarPose,
    body_silhouette,
    make_pose,
    pose_trajectory,
    render_body,
    render_joint_heatmaps,
    render_measurement_garment,
)
from .garment import GarmentSpecError, SyntheticGarmentSpec, render_garment
from .world import (
    DEFAULT_HEATMAP_SIGMA,
    SyntheticFrameRecord,
    degrade_semantic_estimate,
    generate_sequence,
)

__all__ = [
    "JOINT_NAMES",
    "LIMB_BONES",
    "AvatarPose",
    "body_silhouette",
    "make_pose",
    "pose_trajectory",
    "render_body",
    "render_joint_heatmaps",
    "render_measurement_garment",
    "GarmentSpecError",
    "SyntheticGarmentSpec",
    "render_garment",
    "DEFAULT_HEATMAP_SIGMA",
    "SyntheticFrameRecord",
    "degrade_semantic_estimate",
    "generate_sequence",
]
