"""Sequence generation and the synthetic perception-degradation model.

``generate_sequence`` produces paired ground truth: the raw frame with the
garment composited on, the body-part labels *under* the garment, joint
heatmaps, the measurement-garment render and the exact garment layer. Body
truth never reads the garment spec, which makes garment invariance a
bit-exact assertable property rather than an aspiration.

``degrade_semantic_estimate`` models how a direct body-part estimator
behaves on the raw frame: near-perfect for tight garments, occluded and
inflated for loose ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rasters import FrameImage, MaskImage, SemanticMap
from .avatar import (
    AvatarPose,
    pose_trajectory,
    render_body,
    render_joint_heatmaps,
    render_measurement_garment,
)
from .garment import SyntheticGarmentSpec, render_garment

__all__ = [
    "SyntheticFrameRecord",
    "generate_sequence",
    "degrade_semantic_estimate",
    "DEFAULT_HEATMAP_SIGMA",
]

DEFAULT_HEATMAP_SIGMA = 2.0


def _quantize(data: np.ndarray) -> np.ndarray:
    # 8-bit lattice so PNG round-trips are bit-exact
    return (np.round(np.asarray(data) * 255.0) / 255.0).astype(np.float32)


@dataclass(eq=False)
class SyntheticFrameRecord:
    """Ground truth for one frame of an avatar sequence."""

    index: int
    pose: AvatarPose
    raw: FrameImage
    heatmaps: np.ndarray
    gt_semantic: SemanticMap
    vm_render: FrameImage
    garment_image: FrameImage
    garment_mask: MaskImage


def generate_sequence(
    spec: SyntheticGarmentSpec,
    frames: int,
    resolution: tuple[int, int],
    seed: int,
    *,
    motion: str = "rotate",
    rotation_period: int = 120,
    start_angle: float = 0.0,
    heatmap_sigma: float = DEFAULT_HEATMAP_SIGMA,
) -> list[SyntheticFrameRecord]:
    """Deterministic paired avatar sequence wearing ``spec``."""
    if frames < 1:
        raise ValueError(f"frames must be >= 1, got {frames}")
    height, width = resolution
    if height % 8 or width % 8:
        raise ValueError(f"resolution must be divisible by 8, got {height}x{width}")
    poses = pose_trajectory(
        frames, resolution, motion=motion, rotation_period=rotation_period, start_angle=start_angle
    )
    records = []
    for t, pose in enumerate(poses):
        body_rgb, gt_semantic = render_body(pose, resolution)
        vm = render_measurement_garment(pose, resolution)
        heatmaps = render_joint_heatmaps(pose, heatmap_sigma, resolution)
        mask, texture = render_garment(spec, pose, resolution, t, seed)
        raw = np.where(mask[None], texture, body_rgb.data.astype(np.float64))
        garment_image = np.where(mask[None], texture, 0.0)
        records.append(
            SyntheticFrameRecord(
                index=t,
                pose=pose,
                raw=FrameImage(_quantize(raw), role="rgb"),
                heatmaps=heatmaps,
                gt_semantic=gt_semantic,
                vm_render=FrameImage(_quantize(vm.data), role="rgb"),
                garment_image=FrameImage(_quantize(garment_image), role="rgb"),
                garment_mask=MaskImage(mask.astype(np.float32)[None]),
            )
        )
    return records


# ---------------------------------------------------------------------------
# direct-estimate degradation


def _boundary_noise(labels: np.ndarray, rng: np.random.Generator, flip_prob: float) -> np.ndarray:
    """Flip a random subset of label-boundary pixels to a neighbor's label."""
    out = labels.copy()
    shifted = [
        np.roll(labels, 1, axis=0),
        np.roll(labels, -1, axis=0),
        np.roll(labels, 1, axis=1),
        np.roll(labels, -1, axis=1),
    ]
    boundary = np.zeros(labels.shape, dtype=bool)
    for s in shifted:
        boundary |= s != labels
    flip = boundary & (rng.random(labels.shape) < flip_prob)
    choice = rng.integers(0, 4, size=labels.shape)
    neighbor = np.select([choice == k for k in range(4)], shifted)
    out[flip] = neighbor[flip]
    return out


def _cone(labels: np.ndarray, part_ids: list[int], widen: float = 1.5) -> tuple[np.ndarray, float, float]:
    """Occlusion cone over the given parts, anchored at the torso bottom."""
    torso = labels == 1
    ys_t, xs_t = np.nonzero(torso)
    part = np.isin(labels, part_ids)
    if not torso.any() or not part.any():
        return np.zeros(labels.shape, dtype=bool), 0.0, 0.0
    waist_y = float(np.percentile(ys_t, 85))
    cx = float(xs_t.mean())
    half_w = 0.5 * (xs_t.max() - xs_t.min())
    bottom = float(np.nonzero(part)[0].max()) + 2.0
    ys, xs = np.mgrid[0 : labels.shape[0], 0 : labels.shape[1]].astype(np.float64)
    down = np.clip((ys - waist_y) / max(bottom - waist_y, 1.0), 0.0, 1.5)
    cone = (ys >= waist_y) & (ys <= bottom) & (np.abs(xs - cx) <= half_w * (1.0 + (widen - 1.0) * down))
    return cone, waist_y, bottom


def degrade_semantic_estimate(
    gt: SemanticMap, spec: SyntheticGarmentSpec, seed: int
) -> SemanticMap:
    """Model of a direct body-part estimator applied to the clothed frame.

    Tight garments leave only mild boundary noise. Loose styles occlude the
    covered limbs: those labels collapse to background or get swallowed by
    an inflated torso region, mimicking how part segmentation fails when the
    body contour is hidden.
    """
    palette = gt.palette
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 431))))
    labels = gt.labels.copy()
    idx = palette.index_of

    if spec.style == "tight":
        labels = _boundary_noise(labels, rng, flip_prob=0.30)
        return SemanticMap(labels, palette)

    if spec.style == "loose-skirt":
        leg_ids = [idx(n) for n in ("left_thigh", "right_thigh", "left_shin", "right_shin")]
        cone, waist_y, bottom = _cone(labels, leg_ids)
        legs = np.isin(labels, leg_ids)
        ys = np.mgrid[0 : labels.shape[0], 0 : labels.shape[1]][0]
        keep = rng.random(labels.shape) < 0.04
        to_torso = legs & ~keep & (ys < waist_y + 0.33 * (bottom - waist_y))
        to_bg = legs & ~keep & ~to_torso
        labels[to_torso] = idx("torso")
        labels[to_bg] = 0
        # the torso estimate inflates to the skirt silhouette: most of the
        # cone reads as one body blob, the hem tails off into background
        down = np.clip((ys - waist_y) / max(bottom - waist_y, 1.0), 0.0, 1.5)
        swallow = cone & (labels == 0) & (rng.random(labels.shape) < 0.95 - 0.55 * down)
        labels[swallow] = idx("torso")

    elif spec.style == "loose-sleeve":
        arm_ids = [
            idx(n)
            for n in (
                "left_upper_arm",
                "right_upper_arm",
                "left_forearm",
                "right_forearm",
                "left_hand",
                "right_hand",
            )
        ]
        arms = np.isin(labels, arm_ids)
        keep = rng.random(labels.shape) < 0.08
        upper = np.isin(labels, [idx("left_upper_arm"), idx("right_upper_arm")])
        labels[arms & ~keep & upper] = idx("torso")
        labels[arms & ~keep & ~upper] = 0

    elif spec.style == "jacket":
        torso = labels == idx("torso")
        grow = rng.random(labels.shape) < 0.8
        inflated = torso.copy()
        for _ in range(3):
            inflated |= (
                np.roll(inflated, 1, 0) | np.roll(inflated, -1, 0)
                | np.roll(inflated, 1, 1) | np.roll(inflated, -1, 1)
            )
        labels[inflated & (labels == 0) & grow] = idx("torso")
        upper = np.isin(labels, [idx("left_upper_arm"), idx("right_upper_arm")])
        labels[upper & (rng.random(labels.shape) < 0.75)] = idx("torso")

    labels = _boundary_noise(labels, rng, flip_prob=0.30)
    return SemanticMap(labels, palette)
