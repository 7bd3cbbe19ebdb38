"""Procedural 2D articulated avatar.

The avatar is a flat paper-doll with a rigid 17-joint skeleton. In-place
rotation is modeled by sliding the shoulder/hip roots horizontally with
cos(root_angle) (an orthographic view of a turning planar body) while each
limb hangs rigidly from its root with in-plane swing angles, so every limb
bone keeps a constant pixel length across a sequence. Body parts are drawn
as analytic capsules/discs evaluated per pixel, which keeps renders exactly
mirror-symmetric around the image center column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rasters import FrameImage, SemanticMap, SYNTHETIC_PALETTE, RasterError

__all__ = [
    "JOINT_NAMES",
    "LIMB_BONES",
    "AvatarPose",
    "make_pose",
    "pose_trajectory",
    "render_body",
    "render_measurement_garment",
    "render_joint_heatmaps",
    "body_silhouette",
]

JOINT_NAMES = (
    "head",
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "pelvis",
    "chest",
    "nose",
)

# Bones whose pixel length must stay constant over a sequence (rigid limbs).
LIMB_BONES = (
    ("left_shoulder", "left_elbow"),
    ("left_elbow", "left_wrist"),
    ("right_shoulder", "right_elbow"),
    ("right_elbow", "right_wrist"),
    ("left_hip", "left_knee"),
    ("left_knee", "left_ankle"),
    ("right_hip", "right_knee"),
    ("right_knee", "right_ankle"),
    ("neck", "head"),
)


@dataclass(frozen=True)
class AvatarPose:
    """Joint pixel positions plus the in-place rotation phase."""

    joints: dict[str, tuple[float, float]]
    root_angle: float
    time_index: int
    resolution: tuple[int, int]

    def __post_init__(self) -> None:
        missing = set(JOINT_NAMES) - set(self.joints)
        if missing:
            raise RasterError(f"pose missing joints: {sorted(missing)}")
        height, width = self.resolution
        for name, (x, y) in self.joints.items():
            if not (0 <= x <= width - 1 and 0 <= y <= height - 1):
                raise RasterError(
                    f"joint {name} at ({x:.1f}, {y:.1f}) outside {width}x{height} image"
                )

    def __getitem__(self, name: str) -> tuple[float, float]:
        return self.joints[name]


def _proportions(resolution: tuple[int, int]) -> dict[str, float]:
    height, width = resolution
    s = float(height)
    return {
        "cx": (width - 1) / 2.0,
        "pelvis_y": 0.60 * s,
        "chest_y": 0.40 * s,
        "neck_y": 0.33 * s,
        "head_y": 0.24 * s,
        "nose_y": 0.22 * s,
        "shoulder_y": 0.36 * s,
        "shoulder_dx": 0.155 * s,
        "hip_dx": 0.085 * s,
        "upper_arm": 0.13 * s,
        "forearm": 0.12 * s,
        "thigh": 0.155 * s,
        "shin": 0.145 * s,
        "head_r": 0.055 * s,
        "torso_r": 0.105 * s,
        "limb_r": 0.030 * s,
        "hand_r": 0.026 * s,
    }


def make_pose(
    resolution: tuple[int, int],
    time_index: int = 0,
    root_angle: float = 0.0,
    arm_phase: float = 0.0,
    arm_amplitude: float = 0.45,
    leg_amplitude: float = 0.10,
) -> AvatarPose:
    """Place the skeleton for one frame.

    ``arm_phase`` drives an in-plane pendulum swing of both arms (opposite
    phases) and a small leg sway; all limb bone lengths are invariant to it.
    """
    p = _proportions(resolution)
    cx = p["cx"]
    cos_t = math.cos(root_angle)

    joints: dict[str, tuple[float, float]] = {}
    joints["pelvis"] = (cx, p["pelvis_y"])
    joints["chest"] = (cx, p["chest_y"])
    joints["neck"] = (cx, p["neck_y"])
    joints["head"] = (cx, p["head_y"])
    joints["nose"] = (cx + 0.045 * resolution[0] * math.sin(root_angle), p["nose_y"])

    for side, sign in (("left", 1.0), ("right", -1.0)):
        shoulder = (cx + sign * p["shoulder_dx"] * cos_t, p["shoulder_y"])
        hip = (cx + sign * p["hip_dx"] * cos_t, p["pelvis_y"])
        swing = arm_amplitude * math.sin(arm_phase + (0.0 if side == "left" else math.pi))
        elbow = (
            shoulder[0] + p["upper_arm"] * math.sin(swing) * sign,
            shoulder[1] + p["upper_arm"] * math.cos(swing),
        )
        wrist = (
            elbow[0] + p["forearm"] * math.sin(swing * 1.4) * sign,
            elbow[1] + p["forearm"] * math.cos(swing * 1.4),
        )
        gait = leg_amplitude * math.sin(arm_phase + (math.pi if side == "left" else 0.0))
        knee = (
            hip[0] + p["thigh"] * math.sin(gait) * sign,
            hip[1] + p["thigh"] * math.cos(gait),
        )
        ankle = (
            knee[0] + p["shin"] * math.sin(gait * 0.5) * sign,
            knee[1] + p["shin"] * math.cos(gait * 0.5),
        )
        joints[f"{side}_shoulder"] = shoulder
        joints[f"{side}_hip"] = hip
        joints[f"{side}_elbow"] = elbow
        joints[f"{side}_wrist"] = wrist
        joints[f"{side}_knee"] = knee
        joints[f"{side}_ankle"] = ankle

    return AvatarPose(joints=joints, root_angle=root_angle, time_index=time_index, resolution=resolution)


def pose_trajectory(
    frames: int,
    resolution: tuple[int, int],
    motion: str = "rotate",
    rotation_period: int = 120,
    swing_period: int = 36,
    start_angle: float = 0.0,
) -> list[AvatarPose]:
    """Smooth in-place rotation plus arm swings; ``static`` freezes the pose."""
    if motion not in ("rotate", "static"):
        raise ValueError(f"unknown motion {motion!r}")
    poses = []
    for t in range(frames):
        if motion == "static":
            angle, phase = start_angle, 0.0
        else:
            angle = start_angle + 2.0 * math.pi * t / rotation_period
            phase = 2.0 * math.pi * t / swing_period
        poses.append(make_pose(resolution, time_index=t, root_angle=angle, arm_phase=phase))
    return poses


# ---------------------------------------------------------------------------
# analytic rasterization


def _grid(resolution: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    height, width = resolution
    ys, xs = np.mgrid[0:height, 0:width]
    return xs.astype(np.float64), ys.astype(np.float64)


def _capsule_field(
    xs: np.ndarray, ys: np.ndarray, p0: tuple[float, float], p1: tuple[float, float]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distance-to-segment plus body-local (across, along) coordinates."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    norm2 = dx * dx + dy * dy
    rx, ry = xs - p0[0], ys - p0[1]
    if norm2 <= 1e-12:
        along = np.zeros_like(xs)
        across = np.hypot(rx, ry)
        return across, across, along
    t = np.clip((rx * dx + ry * dy) / norm2, 0.0, 1.0)
    px, py = rx - t * dx, ry - t * dy
    dist = np.hypot(px, py)
    # signed across-axis offset: positive to the right of the axis direction
    across = (rx * dy - ry * dx) / math.sqrt(norm2)
    along = t * math.sqrt(norm2)
    return dist, across, along


def _torso_radius(p: dict[str, float], root_angle: float) -> float:
    return p["torso_r"] * (0.55 + 0.45 * abs(math.cos(root_angle)))


def _part_geometry(pose: AvatarPose) -> list[tuple[str, tuple, tuple, float]]:
    """(label, p0, p1, radius) draw list, torso first so limbs overwrite it."""
    p = _proportions(pose.resolution)
    torso_r = _torso_radius(p, pose.root_angle)
    parts = [
        ("torso", pose["pelvis"], pose["chest"], torso_r),
        ("head_neck", pose["neck"], pose["chest"], 0.45 * torso_r),
        ("head_neck", pose["head"], pose["head"], p["head_r"]),
    ]
    for side in ("left", "right"):
        parts.extend(
            [
                (f"{side}_thigh", pose[f"{side}_hip"], pose[f"{side}_knee"], p["limb_r"]),
                (f"{side}_shin", pose[f"{side}_knee"], pose[f"{side}_ankle"], 0.9 * p["limb_r"]),
                (f"{side}_upper_arm", pose[f"{side}_shoulder"], pose[f"{side}_elbow"], 0.95 * p["limb_r"]),
                (f"{side}_forearm", pose[f"{side}_elbow"], pose[f"{side}_wrist"], 0.85 * p["limb_r"]),
            ]
        )
        elbow, wrist = pose[f"{side}_elbow"], pose[f"{side}_wrist"]
        ex, ey = wrist[0] - elbow[0], wrist[1] - elbow[1]
        n = math.hypot(ex, ey) or 1.0
        hand = (wrist[0] + ex / n * p["hand_r"], wrist[1] + ey / n * p["hand_r"])
        parts.append((f"{side}_hand", hand, hand, p["hand_r"]))
    return parts


_SKIN = np.array([0.82, 0.66, 0.54])
_UNDERLAY = np.array([0.42, 0.44, 0.50])  # base tight layer on torso/thighs
_BACKGROUND = 0.10

_PART_TINT = {
    "torso": _UNDERLAY,
    "head_neck": _SKIN,
    "left_upper_arm": _SKIN * 0.97,
    "right_upper_arm": _SKIN * 0.97,
    "left_forearm": _SKIN,
    "right_forearm": _SKIN,
    "left_thigh": _UNDERLAY * 1.08,
    "right_thigh": _UNDERLAY * 1.08,
    "left_shin": _SKIN * 0.9,
    "right_shin": _SKIN * 0.9,
    "left_hand": _SKIN * 1.05,
    "right_hand": _SKIN * 1.05,
}


def render_body(pose: AvatarPose, resolution: tuple[int, int]) -> tuple[FrameImage, SemanticMap]:
    """Bare avatar (no garment): RGB render and ground-truth part labels."""
    xs, ys = _grid(resolution)
    rgb = np.full((3,) + xs.shape, _BACKGROUND, dtype=np.float64)
    labels = np.zeros(xs.shape, dtype=np.uint8)
    palette = SYNTHETIC_PALETTE
    for name, p0, p1, radius in _part_geometry(pose):
        dist, across, _ = _capsule_field(xs, ys, p0, p1)
        inside = dist <= radius
        if not inside.any():
            continue
        labels[inside] = palette.index_of(name)
        # cylindrical shading from the across-axis offset
        ratio = np.clip(across[inside] / radius, -1.0, 1.0)
        shade = 0.72 + 0.28 * np.cos(np.arcsin(ratio))
        tint = _PART_TINT[name]
        for c in range(3):
            rgb[c][inside] = tint[c] * shade
    frame = FrameImage(np.clip(rgb, 0.0, 1.0).astype(np.float32), role="rgb")
    return frame, SemanticMap(labels, palette)


def body_silhouette(pose: AvatarPose, resolution: tuple[int, int], dilate: float = 0.0) -> np.ndarray:
    """Boolean union of all body parts, optionally inflated by ``dilate`` px."""
    xs, ys = _grid(resolution)
    sil = np.zeros(xs.shape, dtype=bool)
    for _, p0, p1, radius in _part_geometry(pose):
        dist, _, _ = _capsule_field(xs, ys, p0, p1)
        sil |= dist <= radius + dilate
    return sil


# Parts kept in the measurement-garment render: extremities (head, hands)
# are removed, and there are no feet in this rig to begin with.
_MEASUREMENT_PARTS = (
    "torso",
    "left_upper_arm",
    "right_upper_arm",
    "left_forearm",
    "right_forearm",
    "left_thigh",
    "right_thigh",
    "left_shin",
    "right_shin",
)


def render_measurement_garment(pose: AvatarPose, resolution: tuple[int, int]) -> FrameImage:
    """Grid-textured, extremity-free body template render.

    The grid longitude is anchored to body-local surface coordinates and
    shifted by the rotation phase, so the pattern turns with the body and a
    root_angle of pi yields exactly the column-mirrored pattern of angle 0.
    The render uses canonical template proportions only (no per-person shape
    variation) and never reads the garment spec.
    """
    xs, ys = _grid(resolution)
    rgb = np.full((3,) + xs.shape, _BACKGROUND, dtype=np.float64)
    p = _proportions(pose.resolution)
    torso_r = _torso_radius(p, pose.root_angle)
    geometry = {name: (p0, p1, r) for name, p0, p1, r in _part_geometry(pose)}
    for name in _MEASUREMENT_PARTS:
        p0, p1, radius = geometry[name]
        if name == "torso":
            radius = torso_r
        dist, across, along = _capsule_field(xs, ys, p0, p1)
        inside = dist <= radius
        if not inside.any():
            continue
        ratio = np.clip(across[inside] / radius, -1.0, 1.0)
        longitude = np.arcsin(ratio) + pose.root_angle
        # even longitude harmonic keeps the mirror property at angle pi
        tex = 0.5 + 0.21 * np.cos(2.0 * longitude) + 0.21 * np.cos(2.0 * np.pi * along[inside] / 7.0)
        rgb[0][inside] = tex * 0.55
        rgb[1][inside] = tex
        rgb[2][inside] = tex * 0.75
    return FrameImage(np.clip(rgb, 0.0, 1.0).astype(np.float32), role="rgb")


def render_joint_heatmaps(
    pose: AvatarPose,
    sigma: float,
    resolution: tuple[int, int],
    centers: dict[str, tuple[float, float]] | None = None,
) -> np.ndarray:
    """(J, H, W) isotropic Gaussians with peak 1.0 at each joint center.

    ``centers`` overrides joint positions (used to model estimator jitter);
    off-image centers simply produce truncated blobs.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    xs, ys = _grid(resolution)
    maps = np.empty((len(JOINT_NAMES),) + xs.shape, dtype=np.float32)
    source = centers or pose.joints
    for j, name in enumerate(JOINT_NAMES):
        jx, jy = source[name]
        d2 = (xs - jx) ** 2 + (ys - jy) ** 2
        maps[j] = np.exp(-d2 / (2.0 * sigma * sigma)).astype(np.float32)
    return maps
