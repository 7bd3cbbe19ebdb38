"""Input validation helpers used by the estimators and the runtime."""

from __future__ import annotations

import numpy as np

from .rasters import FrameImage, RasterError, SemanticMap

__all__ = [
    "check_frame_image",
    "check_semantic_map",
    "check_same_resolution",
    "check_resolution",
    "as_batch",
]


def check_frame_image(x, role: str | None = None, name: str = "input") -> FrameImage:
    """Accept a FrameImage (or raw array) and verify its role contract."""
    if not isinstance(x, FrameImage):
        try:
            x = FrameImage(np.asarray(x), role=role)
        except RasterError as exc:
            raise RasterError(f"{name}: {exc}") from exc
    if role is not None:
        want = {"rgb": 3, "mask": 1, "garment_invariant": 6, "hybrid": 6, "pair": 4}.get(role)
        if want is not None and x.channels != want:
            raise RasterError(f"{name}: expected {want} channels for role {role!r}, got {x.channels}")
    return x


def check_semantic_map(m, name: str = "target") -> SemanticMap:
    if not isinstance(m, SemanticMap):
        raise RasterError(f"{name}: expected a SemanticMap, got {type(m).__name__}")
    return m


def check_resolution(x, resolution: tuple[int, int], name: str = "input") -> None:
    if tuple(x.resolution) != tuple(resolution):
        raise RasterError(
            f"{name}: resolution {tuple(x.resolution)} does not match expected {tuple(resolution)}"
        )


def check_same_resolution(*items, names: list[str] | None = None) -> tuple[int, int]:
    if not items:
        raise RasterError("no rasters given")
    resolutions = [tuple(item.resolution) for item in items]
    if len(set(resolutions)) != 1:
        labels = names or [f"arg{i}" for i in range(len(items))]
        detail = ", ".join(f"{n}={r}" for n, r in zip(labels, resolutions))
        raise RasterError(f"resolution mismatch: {detail}")
    return resolutions[0]


def as_batch(images: "FrameImage | list[FrameImage]") -> list[FrameImage]:
    if isinstance(images, FrameImage):
        return [images]
    items = list(images)
    if not items:
        raise RasterError("empty batch")
    return items
