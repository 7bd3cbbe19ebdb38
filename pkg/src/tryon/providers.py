"""Perception providers: the boundary to pose/segmentation estimators.

Real systems plug body-part, keypoint and segmentation models in behind
this interface; the repository ships a synthetic implementation backed by
the avatar world, with optional per-frame estimate jitter so downstream
stages see realistic frame-to-frame perception noise. Adapters for real
estimators are intentionally stubs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rasters import FrameImage, MaskImage, SemanticMap
from .synthetic import (
    AvatarPose,
    SyntheticGarmentSpec,
    degrade_semantic_estimate,
    render_garment,
    render_joint_heatmaps,
    render_measurement_garment,
)
from .synthetic.world import DEFAULT_HEATMAP_SIGMA, _quantize

__all__ = [
    "ProviderError",
    "PerceptionProvider",
    "SyntheticPerceptionProvider",
    "ExternalAdapterStub",
]


class ProviderError(RuntimeError):
    """A perception provider failed on a frame; callers flag and move on."""


class PerceptionProvider:
    """Interface for per-frame perception.

    Capability flags advertise which outputs a provider implements:
    ``heatmaps``, ``vm``, ``semantic_direct`` and ``segmentation``. Methods
    for unadvertised capabilities raise :class:`ProviderError`.
    """

    capabilities: frozenset[str] = frozenset()
    resolution: tuple[int, int] = (0, 0)

    def heatmaps(self, index: int) -> np.ndarray:
        raise ProviderError("heatmaps not supported by this provider")

    def vm(self, index: int) -> FrameImage:
        raise ProviderError("measurement-garment render not supported by this provider")

    def semantic_direct(self, index: int) -> SemanticMap:
        raise ProviderError("direct semantic estimation not supported by this provider")

    def segmentation(self, index: int) -> tuple[FrameImage, MaskImage]:
        raise ProviderError("garment segmentation not supported by this provider")


@dataclass
class SyntheticPerceptionProvider(PerceptionProvider):
    """Perception backed by the synthetic world.

    ``estimate_noise`` is the std-dev (pixels) of per-frame joint-center
    jitter applied to heatmap rendering, emulating keypoint estimator
    variance between consecutive frames; the direct semantic estimate gets
    per-frame degradation noise from the same stream. Ground-truth poses
    stay untouched.
    """

    poses: list[AvatarPose]
    spec: SyntheticGarmentSpec
    seed: int
    resolution: tuple[int, int]
    estimate_noise: float = 0.6
    heatmap_sigma: float = DEFAULT_HEATMAP_SIGMA
    fail_on: set[int] = field(default_factory=set)
    cycle: bool = False

    capabilities = frozenset({"heatmaps", "vm", "semantic_direct", "segmentation"})

    def __len__(self) -> int:
        return len(self.poses)

    def _pose(self, index: int) -> AvatarPose:
        if index in self.fail_on:
            raise ProviderError(f"injected perception failure at frame {index}")
        if self.cycle:
            index = index % len(self.poses)
        if not 0 <= index < len(self.poses):
            raise ProviderError(f"frame {index} outside recorded range 0..{len(self.poses) - 1}")
        return self.poses[index]

    def _rng(self, index: int, stream: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, index, stream)))
        )

    def heatmaps(self, index: int) -> np.ndarray:
        pose = self._pose(index)
        if self.estimate_noise <= 0:
            return render_joint_heatmaps(pose, self.heatmap_sigma, self.resolution)
        rng = self._rng(index, 1)
        centers = {
            name: (x + rng.normal(0.0, self.estimate_noise), y + rng.normal(0.0, self.estimate_noise))
            for name, (x, y) in pose.joints.items()
        }
        return render_joint_heatmaps(pose, self.heatmap_sigma, self.resolution, centers=centers)

    def vm(self, index: int) -> FrameImage:
        pose = self._pose(index)
        return FrameImage(_quantize(render_measurement_garment(pose, self.resolution).data), role="rgb")

    def semantic_direct(self, index: int) -> SemanticMap:
        pose = self._pose(index)
        from .synthetic import render_body  # avoid import at module top for clarity

        _, gt = render_body(pose, self.resolution)
        frame_seed = int(self._rng(index, 2).integers(0, 2**31 - 1))
        return degrade_semantic_estimate(gt, self.spec, frame_seed)

    def segmentation(self, index: int) -> tuple[FrameImage, MaskImage]:
        pose = self._pose(index)
        mask, texture = render_garment(self.spec, pose, self.resolution, index, self.seed)
        garment = FrameImage(_quantize(np.where(mask[None], texture, 0.0)), role="rgb")
        return garment, MaskImage(mask.astype(np.float32)[None])

    @classmethod
    def from_directory(
        cls, path: str | Path, estimate_noise: float = 0.6, fail_on: set[int] | None = None
    ) -> "SyntheticPerceptionProvider":
        """Rehydrate a provider from a synthetic sequence directory
        (``manifest.json`` extras plus ``poses.json``)."""
        root = Path(path)
        manifest = json.loads((root / "manifest.json").read_text())
        poses_payload = json.loads((root / "poses.json").read_text())
        resolution = tuple(manifest["resolution"])
        poses = [
            AvatarPose(
                joints={k: tuple(v) for k, v in entry["joints"].items()},
                root_angle=entry["root_angle"],
                time_index=entry["time_index"],
                resolution=resolution,
            )
            for entry in poses_payload
        ]
        extras = manifest.get("extras", {})
        spec = SyntheticGarmentSpec(**extras["garment_spec"])
        return cls(
            poses=poses,
            spec=spec,
            seed=int(extras["seed"]),
            resolution=resolution,
            estimate_noise=estimate_noise,
            fail_on=fail_on or set(),
        )


class ExternalAdapterStub(PerceptionProvider):
    """Placeholder adapter for real perception models.

    Integrating actual keypoint/body-part/segmentation networks is out of
    scope here; this stub documents the expected wiring and fails loudly.
    """

    def __init__(self, name: str):
        self.name = name
        self.capabilities = frozenset()

    def _unavailable(self, *_args, **_kwargs):
        raise ProviderError(
            f"external adapter {self.name!r} is a stub; plug a real model in "
            "by subclassing PerceptionProvider"
        )

    heatmaps = _unavailable
    vm = _unavailable
    semantic_direct = _unavailable
    segmentation = _unavailable
