"""Garment-invariant body representation.

Joint heatmaps are grouped into three channels (right limbs / head / left
limbs) with the garment-sensitive hip and knee joints discarded, then
concatenated with the measurement-garment render into a 6-channel image.
Both halves depend only on the body, never on what it wears, so the
representation is identical across garments by construction.

The ablation arms swap this representation for weaker alternatives: the
direct degraded estimate (dp), ungrouped-discard heatmaps (hm), grouped
heatmaps alone (shm) or the measurement render alone (vm).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .rasters import FrameImage, RasterError, SemanticMap, concat_channels, semantic_map_to_rgb

__all__ = [
    "GroupTableError",
    "JointGroupTable",
    "group_heatmaps",
    "build_gi",
    "build_variant",
    "VARIANTS",
    "synthetic_group_table",
    "wholebody_group_table",
]

GROUPS = ("R", "G", "B", "X")  # right limbs, head, left limbs, discard

VARIANTS = ("dp", "hm", "shm", "vm", "full")


class GroupTableError(ValueError):
    pass


@dataclass(frozen=True)
class JointGroupTable:
    """joint name -> channel group; hips and knees must be discarded."""

    mapping: dict[str, str]

    def __post_init__(self) -> None:
        for joint, group in self.mapping.items():
            if group not in GROUPS:
                raise GroupTableError(f"joint {joint!r} mapped to unknown group {group!r}")
        for joint, group in self.mapping.items():
            if ("hip" in joint or "knee" in joint) and group != "X":
                raise GroupTableError(
                    f"garment-sensitive joint {joint!r} must be discarded, got group {group!r}"
                )

    def group_of(self, joint: str) -> str:
        try:
            return self.mapping[joint]
        except KeyError:
            raise GroupTableError(f"joint {joint!r} absent from group table") from None

    def without_discards(self) -> "JointGroupTable":
        """Ablation table that keeps every joint (hips/knees included).

        Bypasses the discard rule deliberately; used by the ``hm`` arm.
        """
        redirect = {"left": "B", "right": "R"}
        mapping = {}
        for joint, group in self.mapping.items():
            if group != "X":
                mapping[joint] = group
            else:
                side = joint.split("_", 1)[0]
                mapping[joint] = redirect.get(side, "G")
        table = object.__new__(JointGroupTable)
        object.__setattr__(table, "mapping", mapping)
        return table

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.mapping, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "JointGroupTable":
        return cls(json.loads(Path(path).read_text()))


def _packaged_table(name: str) -> JointGroupTable:
    text = resources.files("tryon.data").joinpath(name).read_text()
    return JointGroupTable(json.loads(text))


def synthetic_group_table() -> JointGroupTable:
    """Default grouping for the 17-joint synthetic skeleton."""
    return _packaged_table("groups_synthetic17.json")


def wholebody_group_table() -> JointGroupTable:
    """Grouping for a 133-keypoint whole-body estimator (adapter mode)."""
    return _packaged_table("groups_wholebody133.json")


def group_heatmaps(
    heatmaps: np.ndarray | dict[str, np.ndarray],
    table: JointGroupTable,
    joint_names: tuple[str, ...] | None = None,
) -> FrameImage:
    """Collapse per-joint heatmaps into a 3-channel image.

    Channels aggregate their group with a per-pixel maximum, preserving
    each joint's peak amplitude; discarded joints contribute nothing and an
    empty group yields a zero channel.
    """
    if isinstance(heatmaps, dict):
        named = heatmaps
    else:
        if joint_names is None:
            from .synthetic import JOINT_NAMES

            joint_names = JOINT_NAMES
        if len(heatmaps) != len(joint_names):
            raise GroupTableError(
                f"{len(heatmaps)} heatmaps but {len(joint_names)} joint names"
            )
        named = dict(zip(joint_names, heatmaps))
    shapes = {m.shape for m in named.values()}
    if len(shapes) != 1:
        raise RasterError(f"heatmaps disagree on resolution: {sorted(shapes)}")
    (shape,) = shapes
    channel_index = {"R": 0, "G": 1, "B": 2}
    out = np.zeros((3,) + shape, dtype=np.float32)
    for joint, raster in named.items():
        group = table.group_of(joint)
        if group == "X":
            continue
        c = channel_index[group]
        np.maximum(out[c], raster, out=out[c])
    return FrameImage(np.clip(out, 0.0, 1.0), role="rgb")


def build_gi(vm: FrameImage, grouped: FrameImage) -> FrameImage:
    """Assemble the 6-channel garment-invariant image: vm first."""
    if vm.channels != 3 or grouped.channels != 3:
        raise RasterError(
            f"expected two 3-channel rasters, got {vm.channels} and {grouped.channels}"
        )
    return concat_channels(vm, grouped, role="garment_invariant")


def build_variant(
    kind: str,
    *,
    vm: FrameImage | None = None,
    heatmaps: np.ndarray | dict[str, np.ndarray] | None = None,
    table: JointGroupTable | None = None,
    degraded: SemanticMap | None = None,
    joint_names: tuple[str, ...] | None = None,
) -> FrameImage:
    """Intermediate representation for one ablation arm.

    ``full`` is the 6-channel garment-invariant image; the others are the
    3-channel alternatives it is compared against.
    """
    kind = kind.lower()
    if kind not in VARIANTS:
        raise GroupTableError(f"unknown variant {kind!r}; choose from {VARIANTS}")
    if kind == "dp":
        if degraded is None:
            raise GroupTableError("variant 'dp' needs the direct degraded estimate")
        return semantic_map_to_rgb(degraded)
    if kind == "vm":
        if vm is None:
            raise GroupTableError("variant 'vm' needs the measurement render")
        return vm
    if heatmaps is None or table is None:
        raise GroupTableError(f"variant {kind!r} needs heatmaps and a group table")
    if kind == "hm":
        return group_heatmaps(heatmaps, table.without_discards(), joint_names)
    if kind == "shm":
        return group_heatmaps(heatmaps, table, joint_names)
    if vm is None:
        raise GroupTableError("variant 'full' needs the measurement render")
    return build_gi(vm, group_heatmaps(heatmaps, table, joint_names))


VARIANT_CHANNELS = {"dp": 3, "hm": 3, "shm": 3, "vm": 3, "full": 6}
