"""Synthetic garments: geometry, textures and stochastic sway.

Loose styles move with a smooth periodic sway plus a stochastic hem
deformation: a seeded quasi-periodic wander that changes the hem every
frame (so a frozen pose still produces appearance variation, which is
what makes per-frame synthesis flicker) while staying smooth in velocity
and acceleration, the way real cloth with momentum behaves. Ground truth
stays temporally coherent by construction; each frame remains a pure
function of (spec, seed, frame index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .avatar import AvatarPose, _capsule_field, _grid, _proportions, _torso_radius

__all__ = ["GarmentSpecError", "SyntheticGarmentSpec", "render_garment"]

STYLES = ("tight", "loose-skirt", "loose-sleeve", "jacket")

WANDER_CHANNELS = 12  # independent wander signals, shared by all styles


class GarmentSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticGarmentSpec:
    style: str = "tight"
    sway_amplitude: float = 0.0
    sway_stochasticity: float = 0.0
    texture_seed: int = 0
    color: tuple[float, float, float] = (0.25, 0.35, 0.75)

    def __post_init__(self) -> None:
        if self.style not in STYLES:
            raise GarmentSpecError(f"unknown style {self.style!r}; choose from {STYLES}")
        if self.style == "tight" and self.sway_amplitude != 0.0:
            raise GarmentSpecError("tight garments must have sway_amplitude = 0")
        if not 0.0 <= self.sway_stochasticity <= 1.0:
            raise GarmentSpecError("sway_stochasticity must lie in [0, 1]")
        if self.sway_amplitude < 0:
            raise GarmentSpecError("sway_amplitude must be non-negative")
        if len(self.color) != 3 or any(not 0.0 <= c <= 1.0 for c in self.color):
            raise GarmentSpecError("color must be three floats in [0, 1]")

    @property
    def garment_id(self) -> str:
        return f"{self.style}-s{self.texture_seed}"


def _frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    # per-frame stream: reproducible regardless of generation order
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, frame_index))))


def _wander_values(seed: int, frame_index: int) -> np.ndarray:
    """Smooth stochastic wander signals sampled at one frame.

    Each channel is a quasi-periodic mix of three sinusoids with seeded
    random periods (14..60 frames), phases and weights, normalized to unit
    variance. The motion is unpredictable from the pose stream yet smooth
    in velocity and acceleration, the way cloth with momentum moves, and
    every frame is a pure function of (seed, frame_index).
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 7001))))
    periods = rng.uniform(14.0, 60.0, (WANDER_CHANNELS, 3))
    phases = rng.uniform(0.0, 2.0 * math.pi, (WANDER_CHANNELS, 3))
    raw_weights = rng.standard_normal((WANDER_CHANNELS, 3))
    weights = raw_weights / np.linalg.norm(raw_weights, axis=1, keepdims=True)
    waves = np.sin(2.0 * math.pi * frame_index / periods + phases)
    return math.sqrt(2.0) * (weights * waves).sum(axis=1)


def _mode_phases(seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 7002))))
    return rng.uniform(0.0, 2.0 * math.pi, WANDER_CHANNELS)


def _wander_field(
    coords: np.ndarray, span: float, amplitude: float, coeffs: np.ndarray, phases: np.ndarray
) -> np.ndarray:
    """Spatially smooth ripple whose mode amplitudes wander over time."""
    out = np.zeros_like(coords, dtype=np.float64)
    for k in (1, 2, 3):
        out += (amplitude * coeffs[k - 1] / k) * np.sin(
            2.0 * math.pi * k * coords / span + phases[k - 1]
        )
    return out


def _texture(spec: SyntheticGarmentSpec, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((spec.texture_seed, 977))))
    angle = rng.uniform(0.0, math.pi)
    period = rng.uniform(6.0, 11.0)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    wave = np.cos(2.0 * math.pi * (xs * math.cos(angle) + ys * math.sin(angle)) / period + phase)
    pattern = 0.72 + 0.25 * wave
    tex = np.stack([pattern * c for c in spec.color])
    return np.clip(tex, 0.0, 1.0)


def _sway(spec: SyntheticGarmentSpec, frame_index: int, ar: np.ndarray) -> tuple[float, float]:
    """(horizontal hem drift, stochastic magnitude) for one frame."""
    smooth = spec.sway_amplitude * math.sin(2.0 * math.pi * frame_index / 24.0)
    stochastic = spec.sway_stochasticity * spec.sway_amplitude
    drift = smooth + 0.45 * stochastic * ar[0]
    return drift, stochastic


def render_garment(
    spec: SyntheticGarmentSpec,
    pose: AvatarPose,
    resolution: tuple[int, int],
    frame_index: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Render one garment frame.

    Returns ``(mask, texture)`` where ``mask`` is the boolean coverage set
    and ``texture`` the (3, H, W) garment colors; the caller composites
    ``texture`` over the body exactly where ``mask`` is set.
    """
    xs, ys = _grid(resolution)
    p = _proportions(pose.resolution)
    torso_r = _torso_radius(p, pose.root_angle)
    ar = _wander_values(seed, frame_index) if spec.style != "tight" else np.zeros(WANDER_CHANNELS)
    phases = _mode_phases(seed)
    drift, stochastic = _sway(spec, frame_index, ar)

    mask = np.zeros(xs.shape, dtype=bool)

    def add_capsule(p0, p1, radius):
        dist, _, _ = _capsule_field(xs, ys, p0, p1)
        mask[dist <= radius] = True

    if spec.style == "tight":
        add_capsule(pose["pelvis"], pose["chest"], torso_r + 1.0)
        for side in ("left", "right"):
            add_capsule(pose[f"{side}_shoulder"], pose[f"{side}_elbow"], 0.95 * p["limb_r"] + 1.0)

    elif spec.style == "loose-skirt":
        add_capsule(pose["pelvis"], pose["chest"], torso_r + 1.0)
        waist_y = pose["pelvis"][1] - 0.04 * resolution[0]
        hem_y = pose["pelvis"][1] + 0.285 * resolution[0]
        hem_half = 0.155 * resolution[0]
        # hem width and hem line wander smoothly; axis leans with the sway
        ripple = _wander_field(xs[0], float(resolution[1]), 0.9 * stochastic, ar[1:4], phases[1:4])
        hem_edge = hem_y + _wander_field(xs[0], float(resolution[1]), 0.6 * stochastic, ar[4:7], phases[4:7])
        down = (ys - waist_y) / (hem_y - waist_y)
        inside_y = (ys >= waist_y) & (ys <= hem_edge[None, :] + 0.0)
        axis = pose["pelvis"][0] + down * drift
        half = 0.55 * torso_r + np.clip(down, 0.0, 1.2) * (hem_half - 0.55 * torso_r)
        half = half + np.clip(down, 0.0, 1.2) * ripple[None, :]
        mask |= inside_y & (np.abs(xs - axis) <= half)

    elif spec.style == "loose-sleeve":
        add_capsule(pose["pelvis"], pose["chest"], torso_r + 1.0)
        flare = 0.3 * spec.sway_amplitude + 0.55 * stochastic * ar[7:9]
        for i, side in enumerate(("left", "right")):
            r_upper = 1.75 * p["limb_r"] + 0.5 * abs(drift) * 0.2
            r_fore = 2.1 * p["limb_r"] + max(-p["limb_r"], float(flare[i]))
            add_capsule(pose[f"{side}_shoulder"], pose[f"{side}_elbow"], r_upper)
            add_capsule(pose[f"{side}_elbow"], pose[f"{side}_wrist"], r_fore)

    elif spec.style == "jacket":
        hem = 0.6 * stochastic * float(ar[9])
        body_r = torso_r + 0.045 * resolution[0] + 0.35 * drift * 0.2 + hem
        body_r = max(torso_r + 1.0, body_r)
        add_capsule(pose["pelvis"], pose["chest"], body_r)
        for side in ("left", "right"):
            add_capsule(pose[f"{side}_shoulder"], pose[f"{side}_elbow"], 1.5 * p["limb_r"] + 0.5 * hem)

    texture = _texture(spec, xs, ys)
    # mild cloth shading so the garment is not flat color
    shade = 0.9 + 0.1 * np.cos(2.0 * math.pi * ys / 23.0)
    texture = np.clip(texture * shade[None, :, :], 0.0, 1.0)
    return mask, texture
