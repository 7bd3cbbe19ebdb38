"""Raster carrier types shared by every pipeline stage.

All image-like data moves through :class:`FrameImage` / :class:`MaskImage`
(float rasters in [0, 1], channel-first) and :class:`SemanticMap` (integer
body-part labels plus a palette). Values outside [0, 1] are rejected at
construction; clamping is an explicit, separate operation so silent range
bugs cannot propagate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RasterError",
    "FrameImage",
    "MaskImage",
    "LabelSpec",
    "Palette",
    "SemanticMap",
    "SYNTHETIC_PALETTE",
    "DENSEPOSE_PALETTE",
    "concat_channels",
    "split_channels",
    "clamp01",
    "semantic_map_to_onehot",
    "onehot_to_semantic_map",
    "semantic_map_to_rgb",
]


class RasterError(ValueError):
    """Raised when raster data violates a shape, range or role contract."""


# Channel counts expected for each declared role. ``None`` means the role
# accepts any channel count (used by the one-hot network-input encoding).
ROLE_CHANNELS: dict[str, int | None] = {
    "rgb": 3,
    "mask": 1,
    "garment_invariant": 6,
    "hybrid": 6,
    "pair": 4,
    "onehot": None,
}

# Channel counts accepted when no role is declared: the universal carriers.
CARRIER_CHANNELS = (1, 3, 4, 6)

STRIDE_MULTIPLE = 8  # three stride-2 halvings must divide exactly


def _check_spatial(height: int, width: int) -> None:
    if height % STRIDE_MULTIPLE or width % STRIDE_MULTIPLE:
        raise RasterError(
            f"height and width must be divisible by {STRIDE_MULTIPLE}, "
            f"got {height}x{width}"
        )


@dataclass(frozen=True)
class FrameImage:
    """Channel-first float raster with values in [0, 1].

    The array is copied and frozen on construction; instances are safe to
    share across threads.
    """

    data: np.ndarray
    role: str | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise RasterError(f"expected (channels, height, width), got shape {arr.shape}")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        channels, height, width = arr.shape
        _check_spatial(height, width)
        if self.role is not None:
            if self.role not in ROLE_CHANNELS:
                raise RasterError(f"unknown raster role {self.role!r}")
            want = ROLE_CHANNELS[self.role]
            if want is not None and channels != want:
                raise RasterError(
                    f"role {self.role!r} requires {want} channels, got {channels}"
                )
            if self.role == "onehot" and channels < 1:
                raise RasterError("onehot raster needs at least one channel")
        elif channels not in CARRIER_CHANNELS:
            raise RasterError(
                f"channel count {channels} not in carrier set {CARRIER_CHANNELS}; "
                "declare an explicit role for other layouts"
            )
        if not np.isfinite(arr).all():
            raise RasterError("raster contains non-finite values")
        lo, hi = float(arr.min(initial=0.0)), float(arr.max(initial=0.0))
        if lo < 0.0 or hi > 1.0:
            raise RasterError(
                f"raster values must lie in [0, 1], got range [{lo:.6g}, {hi:.6g}]; "
                "clamp explicitly with clamp01() if that is intended"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def resolution(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]


class MaskImage(FrameImage):
    """Single-channel raster; ``binary`` thresholds at 0.5."""

    def __init__(self, data: np.ndarray):
        super().__init__(np.asarray(data), role="mask")

    @property
    def binary(self) -> np.ndarray:
        return self.data[0] >= 0.5


@dataclass(frozen=True)
class LabelSpec:
    name: str
    color: tuple[int, int, int]


@dataclass(frozen=True)
class Palette:
    """Ordered body-part label set; index 0 is always background."""

    labels: tuple[LabelSpec, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise RasterError("palette must define at least the background label")
        if self.labels[0].name != "background":
            raise RasterError("palette label 0 must be 'background'")
        names = [spec.name for spec in self.labels]
        if len(set(names)) != len(names):
            raise RasterError("palette label names must be unique")
        torso = [n for n in names if n == "torso"]
        split = [n for n in names if "torso" in n and n != "torso"]
        if len(torso) != 1 or split:
            raise RasterError(
                "palette must carry exactly one merged 'torso' label and no "
                f"upper/lower torso split, got {torso + split}"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def index_of(self, name: str) -> int:
        for i, spec in enumerate(self.labels):
            if spec.name == name:
                return i
        raise KeyError(name)

    @property
    def colors(self) -> np.ndarray:
        """(L, 3) uint8 display colors."""
        return np.array([spec.color for spec in self.labels], dtype=np.uint8)


def _palette(*entries: tuple[str, tuple[int, int, int]]) -> Palette:
    return Palette(tuple(LabelSpec(name, color) for name, color in entries))


# Synthetic-world label set. The torso is a single merged label by
# construction; there is never an upper/lower split to begin with.
SYNTHETIC_PALETTE = _palette(
    ("background", (0, 0, 0)),
    ("torso", (200, 60, 60)),
    ("head_neck", (240, 200, 80)),
    ("left_upper_arm", (70, 120, 220)),
    ("right_upper_arm", (70, 200, 220)),
    ("left_forearm", (110, 70, 220)),
    ("right_forearm", (110, 220, 160)),
    ("left_thigh", (200, 120, 60)),
    ("right_thigh", (200, 180, 60)),
    ("left_shin", (140, 60, 160)),
    ("right_shin", (60, 160, 90)),
    ("left_hand", (230, 140, 200)),
    ("right_hand", (150, 230, 90)),
)

# Adapter-mode palette for real body-part estimators: 24 part indices with
# the two torso parts merged into one label, leaving 23 foreground labels.
DENSEPOSE_PALETTE = _palette(
    ("background", (0, 0, 0)),
    ("torso", (200, 60, 60)),
    ("right_hand", (150, 230, 90)),
    ("left_hand", (230, 140, 200)),
    ("left_foot", (90, 90, 230)),
    ("right_foot", (90, 200, 230)),
    ("right_thigh_back", (200, 180, 60)),
    ("left_thigh_back", (200, 120, 60)),
    ("right_thigh_front", (220, 200, 80)),
    ("left_thigh_front", (220, 140, 80)),
    ("right_shin_back", (60, 160, 90)),
    ("left_shin_back", (140, 60, 160)),
    ("right_shin_front", (80, 180, 110)),
    ("left_shin_front", (160, 80, 180)),
    ("left_upper_arm_back", (70, 120, 220)),
    ("right_upper_arm_back", (70, 200, 220)),
    ("left_upper_arm_front", (90, 140, 240)),
    ("right_upper_arm_front", (90, 220, 240)),
    ("left_forearm_back", (110, 70, 220)),
    ("right_forearm_back", (110, 220, 160)),
    ("left_forearm_front", (130, 90, 240)),
    ("right_forearm_front", (130, 240, 180)),
    ("head_left", (240, 200, 80)),
    ("head_right", (240, 220, 100)),
)


@dataclass(frozen=True)
class SemanticMap:
    """Per-pixel discrete body-part labels tied to a palette."""

    labels: np.ndarray
    palette: Palette = field(default=SYNTHETIC_PALETTE)

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise RasterError(f"expected (height, width) labels, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise RasterError(f"labels must be integers, got dtype {arr.dtype}")
        _check_spatial(*arr.shape)
        if arr.size and (arr.min() < 0 or arr.max() >= len(self.palette)):
            raise RasterError(
                f"labels must lie in [0, {len(self.palette) - 1}], "
                f"got range [{arr.min()}, {arr.max()}]"
            )
        arr = arr.astype(np.uint8).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def resolution(self) -> tuple[int, int]:
        return self.labels.shape


def concat_channels(a: FrameImage, b: FrameImage, role: str | None = None) -> FrameImage:
    """Channel-wise concatenation; ``a``'s channels precede ``b``'s."""
    if a.resolution != b.resolution:
        raise RasterError(
            f"cannot concatenate rasters of different resolution: "
            f"{a.channels}x{a.height}x{a.width} vs {b.channels}x{b.height}x{b.width}"
        )
    return FrameImage(np.concatenate([a.data, b.data], axis=0), role=role)


def split_channels(x: FrameImage, at: int) -> tuple[FrameImage, FrameImage]:
    """Inverse of :func:`concat_channels` at the given channel boundary."""
    if not 0 < at < x.channels:
        raise RasterError(f"split point {at} outside (0, {x.channels})")
    return FrameImage(x.data[:at]), FrameImage(x.data[at:])


def clamp01(data: np.ndarray) -> np.ndarray:
    """Explicit range clamp; the only sanctioned way to coerce into [0, 1]."""
    return np.clip(data, 0.0, 1.0)


def semantic_map_to_onehot(m: SemanticMap) -> FrameImage:
    """L-channel one-hot encoding; channel ``l`` is 1 where ``labels == l``."""
    count = len(m.palette)
    onehot = np.zeros((count, m.height, m.width), dtype=np.float32)
    rows, cols = np.indices(m.labels.shape)
    onehot[m.labels, rows, cols] = 1.0
    return FrameImage(onehot, role="onehot")


def onehot_to_semantic_map(x: FrameImage, palette: Palette) -> SemanticMap:
    """Argmax decoding; exact inverse of :func:`semantic_map_to_onehot`."""
    if x.channels != len(palette):
        raise RasterError(
            f"onehot raster has {x.channels} channels but palette has {len(palette)} labels"
        )
    return SemanticMap(np.argmax(x.data, axis=0).astype(np.uint8), palette)


def semantic_map_to_rgb(m: SemanticMap) -> FrameImage:
    """3-channel palette-color rendering, used for display and as the
    semantic half of the 6-channel hybrid network input."""
    colors = m.palette.colors.astype(np.float32) / 255.0
    rgb = colors[m.labels]  # (H, W, 3)
    return FrameImage(np.transpose(rgb, (2, 0, 1)), role="rgb")
