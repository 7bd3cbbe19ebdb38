"""Per-garment dataset: on-disk format, clip sampling and generation.

A dataset directory holds ``manifest.json`` plus five lossless PNGs per
frame (``%06d.raw.png``, ``.garment.png``, ``.mask.png``, ``.vm.png`` and
``.sdp.png`` with 8-bit label indices). Temporal order is preserved via
strictly increasing frame indices; frames lost to provider failures are
recorded as gaps, never silently reindexed, and clips never cross them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import jsonschema
import numpy as np
from PIL import Image

from .providers import ProviderError
from .rasters import (
    DENSEPOSE_PALETTE,
    FrameImage,
    MaskImage,
    Palette,
    SemanticMap,
    SYNTHETIC_PALETTE,
)
from .validation import check_same_resolution

__all__ = [
    "DatasetError",
    "FrameRecord",
    "DatasetManifest",
    "PerGarmentDataset",
    "ClipSampler",
    "generate_dataset",
    "export_synthetic_sequence",
    "load_image_sequence",
    "quantize01",
    "save_frame_image",
    "load_frame_image",
    "save_semantic_map",
    "load_semantic_map",
]

FORMAT_NAME = "tryon-dataset-v1"

PALETTES = {"synthetic": SYNTHETIC_PALETTE, "densepose": DENSEPOSE_PALETTE}


class DatasetError(ValueError):
    pass


def quantize01(data: np.ndarray) -> np.ndarray:
    """Snap values in [0, 1] to the 8-bit lattice PNGs can represent."""
    return (np.round(data * 255.0) / 255.0).astype(np.float32)


def save_frame_image(image: FrameImage, path: Path) -> None:
    arr = np.round(image.data * 255.0).astype(np.uint8)
    if image.channels == 1:
        Image.fromarray(arr[0], mode="L").save(path)
    elif image.channels == 3:
        Image.fromarray(np.transpose(arr, (1, 2, 0)), mode="RGB").save(path)
    else:
        raise DatasetError(f"cannot store {image.channels}-channel raster as PNG: {path}")


def load_frame_image(path: Path, mask: bool = False) -> FrameImage:
    with Image.open(path) as img:
        arr = np.asarray(img)
    data = arr.astype(np.float32) / 255.0
    if mask:
        if data.ndim != 2:
            raise DatasetError(f"{path}: expected single-channel mask PNG")
        return MaskImage(data[None])
    if data.ndim == 2:
        return FrameImage(data[None])
    return FrameImage(np.transpose(data, (2, 0, 1)))


def save_semantic_map(sem: SemanticMap, path: Path) -> None:
    Image.fromarray(sem.labels, mode="L").save(path)


def load_semantic_map(path: Path, palette: Palette) -> SemanticMap:
    with Image.open(path) as img:
        arr = np.asarray(img)
    return SemanticMap(arr.astype(np.uint8), palette)


@dataclass(eq=False)
class FrameRecord:
    """One temporally ordered frame of a per-garment dataset."""

    index: int
    raw: FrameImage
    garment_image: FrameImage
    garment_mask: MaskImage
    vm: FrameImage
    semantic: SemanticMap

    def __post_init__(self) -> None:
        check_same_resolution(
            self.raw, self.garment_image, self.garment_mask, self.vm, self.semantic,
            names=["raw", "garment_image", "garment_mask", "vm", "semantic"],
        )

    @property
    def resolution(self) -> tuple[int, int]:
        return self.raw.resolution

    def identical(self, other: "FrameRecord") -> bool:
        return (
            self.index == other.index
            and np.array_equal(self.raw.data, other.raw.data)
            and np.array_equal(self.garment_image.data, other.garment_image.data)
            and np.array_equal(self.garment_mask.data, other.garment_mask.data)
            and np.array_equal(self.vm.data, other.vm.data)
            and np.array_equal(self.semantic.labels, other.semantic.labels)
        )


@dataclass
class DatasetManifest:
    garment_id: str
    person_id: str
    frame_count: int
    resolution: tuple[int, int]
    fps: float
    config_hash: str
    palette: str = "synthetic"
    files: list[dict] = field(default_factory=list)
    gaps: list[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "garment_id": self.garment_id,
            "person_id": self.person_id,
            "frame_count": self.frame_count,
            "resolution": list(self.resolution),
            "fps": self.fps,
            "config_hash": self.config_hash,
            "palette": self.palette,
            "files": self.files,
            "gaps": self.gaps,
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        validate_manifest(d)
        return cls(
            garment_id=d["garment_id"],
            person_id=d["person_id"],
            frame_count=d["frame_count"],
            resolution=tuple(d["resolution"]),
            fps=d["fps"],
            config_hash=d["config_hash"],
            palette=d["palette"],
            files=d["files"],
            gaps=d["gaps"],
            extras=d.get("extras", {}),
        )

    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _schema() -> dict:
    text = resources.files("tryon.data").joinpath("manifest.schema.json").read_text()
    return json.loads(text)


def validate_manifest(d: dict) -> None:
    try:
        jsonschema.validate(d, _schema())
    except jsonschema.ValidationError as exc:
        raise DatasetError(f"invalid manifest: {exc.message}") from exc
    indices = [f["index"] for f in d["files"]]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise DatasetError("manifest frame indices must be strictly increasing")
    if len(indices) != d["frame_count"]:
        raise DatasetError(
            f"manifest frame_count {d['frame_count']} != file list length {len(indices)}"
        )


class PerGarmentDataset:
    """Ordered frame records plus their manifest."""

    def __init__(self, manifest: DatasetManifest, records: Sequence[FrameRecord]):
        if len(records) != manifest.frame_count:
            raise DatasetError(
                f"manifest frame_count {manifest.frame_count} != records {len(records)}"
            )
        indices = [r.index for r in records]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise DatasetError("record indices must be strictly increasing")
        self.manifest = manifest
        self.records = list(records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i: int) -> FrameRecord:
        return self.records[i]

    @property
    def palette(self) -> Palette:
        return PALETTES[self.manifest.palette]

    def contiguous_runs(self) -> list[tuple[int, int]]:
        """Maximal runs of consecutive frame indices as (start_pos, length)
        over record positions; gaps terminate contiguity."""
        runs = []
        start = 0
        for pos in range(1, len(self.records) + 1):
            if pos == len(self.records) or self.records[pos].index != self.records[pos - 1].index + 1:
                runs.append((start, pos - start))
                start = pos
        return runs

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for rec in self.records:
            names = {
                "index": rec.index,
                "raw": f"{rec.index:06d}.raw.png",
                "garment": f"{rec.index:06d}.garment.png",
                "mask": f"{rec.index:06d}.mask.png",
                "vm": f"{rec.index:06d}.vm.png",
                "sdp": f"{rec.index:06d}.sdp.png",
            }
            save_frame_image(rec.raw, out / names["raw"])
            save_frame_image(rec.garment_image, out / names["garment"])
            save_frame_image(rec.garment_mask, out / names["mask"])
            save_frame_image(rec.vm, out / names["vm"])
            save_semantic_map(rec.semantic, out / names["sdp"])
            files.append(names)
        self.manifest.files = files
        self.manifest.frame_count = len(files)
        manifest_path = out / "manifest.json"
        payload = self.manifest.to_dict()
        validate_manifest(payload)
        manifest_path.write_text(json.dumps(payload, indent=2, sort_keys=True))
        return manifest_path

    @classmethod
    def read(cls, in_dir: str | Path) -> "PerGarmentDataset":
        root = Path(in_dir)
        manifest_path = root / "manifest.json"
        if not manifest_path.exists():
            raise DatasetError(f"{root}: no manifest.json")
        manifest = DatasetManifest.from_dict(json.loads(manifest_path.read_text()))
        palette = PALETTES[manifest.palette]
        records = []
        for names in manifest.files:
            try:
                rec = FrameRecord(
                    index=names["index"],
                    raw=load_frame_image(root / names["raw"]),
                    garment_image=load_frame_image(root / names["garment"]),
                    garment_mask=load_frame_image(root / names["mask"], mask=True),
                    vm=load_frame_image(root / names["vm"]),
                    semantic=load_semantic_map(root / names["sdp"], palette),
                )
            except FileNotFoundError as exc:
                raise DatasetError(f"{root}: manifest lists missing file ({exc})") from exc
            records.append(rec)
        return cls(manifest, records)


@dataclass
class ClipSampler:
    """Samples contiguous clips of uniform random length, with replacement."""

    clip_len_min: int = 8
    clip_len_max: int = 60
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.clip_len_min <= self.clip_len_max:
            raise DatasetError(
                f"need 1 <= clip_len_min <= clip_len_max, got "
                f"[{self.clip_len_min}, {self.clip_len_max}]"
            )
        self._rng = np.random.Generator(np.random.PCG64(self.seed))

    def sample(self, dataset: PerGarmentDataset, count: int) -> list[list[FrameRecord]]:
        if len(dataset) < self.clip_len_min:
            raise DatasetError(
                f"dataset has {len(dataset)} frames, below clip_len_min {self.clip_len_min}"
            )
        runs = dataset.contiguous_runs()
        longest = max(length for _, length in runs)
        if longest < self.clip_len_min:
            raise DatasetError(
                f"longest contiguous run is {longest} frames, below clip_len_min "
                f"{self.clip_len_min} (gaps shorten runs)"
            )
        clips = []
        for _ in range(count):
            length = int(self._rng.integers(self.clip_len_min, self.clip_len_max + 1))
            length = min(length, longest)
            eligible = [(s, l) for s, l in runs if l >= length]
            weights = np.array([l - length + 1 for _, l in eligible], dtype=np.float64)
            pick = int(self._rng.choice(len(eligible), p=weights / weights.sum()))
            run_start, run_len = eligible[pick]
            start = run_start + int(self._rng.integers(0, run_len - length + 1))
            clips.append(dataset.records[start : start + length])
        return clips


def export_synthetic_sequence(
    records,
    out_dir: str | Path,
    *,
    garment_spec,
    seed: int,
    garment_id: str,
    person_id: str = "avatar",
    config_hash: str = "",
    fps: float = 24.0,
    extras: dict | None = None,
) -> Path:
    """Write a synthetic sequence in the dataset format.

    The semantic channel holds the ground-truth labels, and ``poses.json``
    is written next to the manifest so perception providers can be
    rehydrated from the directory alone.
    """
    from dataclasses import asdict

    frame_records = [
        FrameRecord(
            index=r.index,
            raw=r.raw,
            garment_image=r.garment_image,
            garment_mask=r.garment_mask,
            vm=r.vm_render,
            semantic=r.gt_semantic,
        )
        for r in records
    ]
    all_extras = {"kind": "synthetic", "garment_spec": asdict(garment_spec), "seed": seed}
    all_extras.update(extras or {})
    manifest = DatasetManifest(
        garment_id=garment_id,
        person_id=person_id,
        frame_count=len(frame_records),
        resolution=frame_records[0].resolution,
        fps=fps,
        config_hash=config_hash,
        extras=all_extras,
    )
    dataset = PerGarmentDataset(manifest, frame_records)
    manifest_path = dataset.write(out_dir)
    poses_payload = [
        {
            "joints": {k: list(v) for k, v in r.pose.joints.items()},
            "root_angle": r.pose.root_angle,
            "time_index": r.pose.time_index,
        }
        for r in records
    ]
    (Path(out_dir) / "poses.json").write_text(json.dumps(poses_payload))
    return manifest_path


def load_image_sequence(
    in_dir: str | Path, suffix: str = ".raw.png", mask: bool = False
) -> list[FrameImage]:
    """Load an ordered image sequence: all ``*<suffix>`` files sorted by name.

    When no file carries the requested suffix, falls back to ``*.raw.png``
    (sequence directories) and then to every ``*.png``, so plain image
    dumps work too.
    """
    root = Path(in_dir)
    for pattern in (f"*{suffix}", "*.raw.png", "*.png"):
        paths = sorted(root.glob(pattern))
        if paths:
            return [load_frame_image(p, mask=mask) for p in paths]
    raise DatasetError(f"{root}: no PNG frames found")


def generate_dataset(
    frames: Sequence[FrameImage],
    segmentation_provider: Callable[[int], tuple[FrameImage, MaskImage]],
    vm_provider: Callable[[int], FrameImage],
    heatmap_provider: Callable[[int], np.ndarray],
    bodymap,
    *,
    group_table,
    garment_id: str,
    person_id: str,
    config_hash: str = "",
    fps: float = 24.0,
    palette: str = "synthetic",
    extras: dict | None = None,
    allow_person_mismatch: bool = False,
) -> PerGarmentDataset:
    """Build a per-garment dataset from a recorded frame sequence.

    The semantic map for every frame comes from the trained body-map
    network applied to the garment-invariant representation -- never from a
    direct estimate, which is unreliable under loose garments. Provider
    failures flag the frame as a gap and preserve the original indices.
    """
    from .bodyrep import build_gi, group_heatmaps  # local import avoids a cycle

    if not frames:
        raise DatasetError("empty frame sequence")
    bm_person = getattr(bodymap, "person_id", None)
    if bm_person is not None and bm_person != person_id and not allow_person_mismatch:
        raise DatasetError(
            f"body-map network was trained for person {bm_person!r} but dataset "
            f"targets {person_id!r}; pass allow_person_mismatch=True to override"
        )
    records: list[FrameRecord] = []
    gaps: list[dict] = []
    for i, frame in enumerate(frames):
        try:
            garment_image, garment_mask = segmentation_provider(i)
            vm = vm_provider(i)
            heatmaps = heatmap_provider(i)
        except ProviderError as exc:
            gaps.append({"index": i, "reason": str(exc)})
            continue
        grouped = group_heatmaps(heatmaps, group_table)
        gi = build_gi(vm, grouped)
        semantic = bodymap.predict([gi])[0]
        records.append(
            FrameRecord(
                index=i,
                raw=frame,
                garment_image=garment_image,
                garment_mask=garment_mask,
                vm=vm,
                semantic=semantic,
            )
        )
    if not records:
        raise DatasetError("all frames failed perception; nothing to write")
    resolution = records[0].resolution
    manifest = DatasetManifest(
        garment_id=garment_id,
        person_id=person_id,
        frame_count=len(records),
        resolution=resolution,
        fps=fps,
        config_hash=config_hash,
        palette=palette,
        gaps=gaps,
        extras=extras or {},
    )
    return PerGarmentDataset(manifest, records)
