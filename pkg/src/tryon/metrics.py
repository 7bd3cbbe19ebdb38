"""Evaluation metrics: FID, KID, VFID and inter-frame jitter.

Desk-scale feature extractors are fixed-seed random convolutional networks
(2D for FID/KID, 3D over fixed-length clips for VFID); random projections
keep the Frechet/MMD machinery intact while staying fully deterministic
and dependency-free. Absolute values are therefore not comparable to
published numbers built on pretrained backbones -- relative orderings on
matched data are the meaningful output. A hook exists for plugging a
pretrained extractor in at full scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch import nn

from .rasters import FrameImage, MaskImage

__all__ = [
    "FeatureExtractor",
    "MetricReport",
    "fid",
    "kid",
    "vfid",
    "jitter",
    "clip_windows",
    "export_jitter_heatmaps",
    "compute_report",
    "KID_NEGATIVE_TOLERANCE",
]

# The unbiased KID estimator may legitimately dip slightly below zero on
# finite samples; values above -KID_NEGATIVE_TOLERANCE are considered sane.
KID_NEGATIVE_TOLERANCE = 1e-3


class FeatureExtractor:
    """Seeded random-convolution embedding, 2D or 3D.

    kind: ``random2d`` (frames), ``random3d`` (fixed-length clips) or
    ``external`` (full-scale hook; supply ``external_fn`` mapping an input
    batch to (N, dim) features).

    The 3D extractor also sees first- and second-difference channels
    (velocity and acceleration), standing in for the motion sensitivity a
    pretrained video backbone would have: without them random convolutions
    capture the energy of temporal change but cannot tell smooth motion
    from equal-energy flicker. Features are standardized against a fixed
    seeded calibration batch so distances live on a comparable scale
    across extractors.
    """

    def __init__(
        self,
        kind: str = "random2d",
        embedding_dim: int = 64,
        seed: int = 0,
        clip_len: int = 16,
        external_fn=None,
    ):
        if kind not in ("random2d", "random3d", "external"):
            raise ValueError(f"unknown extractor kind {kind!r}")
        self.kind = kind
        self.embedding_dim = embedding_dim
        self.seed = seed
        self.clip_len = clip_len
        self.external_fn = external_fn
        if kind == "external":
            if external_fn is None:
                raise ValueError("external extractor needs external_fn")
            self._net = None
            return
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            if kind == "random2d":
                self._net = nn.Sequential(
                    nn.Conv2d(3, 16, 3, stride=2, padding=1),
                    nn.LeakyReLU(0.2),
                    nn.Conv2d(16, 32, 3, stride=2, padding=1),
                    nn.LeakyReLU(0.2),
                    nn.Conv2d(32, 64, 3, stride=2, padding=1),
                    nn.LeakyReLU(0.2),
                    nn.AdaptiveAvgPool2d(1),
                    nn.Flatten(),
                    nn.Linear(64, embedding_dim),
                ).eval()
            else:
                self._net = nn.Sequential(
                    nn.Conv3d(9, 16, 3, stride=(1, 2, 2), padding=1),
                    nn.LeakyReLU(0.2),
                    nn.Conv3d(16, 32, 3, stride=2, padding=1),
                    nn.LeakyReLU(0.2),
                    nn.Conv3d(32, 64, 3, stride=2, padding=1),
                    nn.LeakyReLU(0.2),
                    nn.AdaptiveAvgPool3d(1),
                    nn.Flatten(),
                    nn.Linear(64, embedding_dim),
                ).eval()
        self._calibrate()

    def _calibrate(self) -> None:
        gen = torch.Generator().manual_seed(self.seed * 7919 + 13)
        if self.kind == "random2d":
            batch = torch.rand((96, 3, 64, 48), generator=gen)
        else:
            batch = torch.rand((48, 3, self.clip_len, 64, 48), generator=gen)
        with torch.no_grad():
            feats = self._forward(batch).numpy().astype(np.float64)
        self.mean_ = feats.mean(axis=0)
        self.scale_ = 1.0 / (feats.std(axis=0) + 1e-12)

    def _forward(self, batch: torch.Tensor) -> torch.Tensor:
        x = batch * 2.0 - 1.0
        if self.kind == "random3d":
            velocity = torch.diff(x, dim=2, prepend=x[:, :, :1])
            acceleration = torch.diff(velocity, dim=2, prepend=velocity[:, :, :1])
            x = torch.cat([x, velocity, acceleration], dim=1)
        return self._net(x)

    @property
    def fingerprint(self) -> str:
        return f"{self.kind}/dim={self.embedding_dim}/seed={self.seed}" + (
            f"/clip={self.clip_len}" if self.kind == "random3d" else ""
        )

    def _to_array(self, items, expect_clip: bool) -> np.ndarray:
        arrays = []
        for item in items:
            if isinstance(item, FrameImage):
                arrays.append(item.data)
            else:
                arrays.append(np.asarray(item, dtype=np.float32))
        batch = np.stack(arrays)
        if expect_clip:
            if batch.ndim != 5:
                raise ValueError(f"expected clips (N, T, 3, H, W), got shape {batch.shape}")
            if batch.shape[1] != self.clip_len:
                raise ValueError(
                    f"3D extractor consumes fixed-length clips of {self.clip_len} "
                    f"frames, got {batch.shape[1]}"
                )
            batch = np.transpose(batch, (0, 2, 1, 3, 4))  # (N, 3, T, H, W)
        elif batch.ndim != 4:
            raise ValueError(f"expected frames (N, 3, H, W), got shape {batch.shape}")
        return batch

    def extract(self, items) -> np.ndarray:
        """(N, dim) float64 standardized features for frames or clips."""
        if self.kind == "external":
            return np.asarray(self.external_fn(items), dtype=np.float64)
        batch = self._to_array(items, expect_clip=self.kind == "random3d")
        chunks = []
        with torch.no_grad():
            for start in range(0, len(batch), 32):
                x = torch.from_numpy(batch[start : start + 32])
                chunks.append(self._forward(x).numpy())
        feats = np.concatenate(chunks).astype(np.float64)
        return (feats - self.mean_) * self.scale_


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.T


def fid(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of two feature sets.

    The cross-term square root uses symmetric eigendecompositions with
    negative eigenvalues clipped at zero, which is robust to near-singular
    covariances at small sample counts.
    """
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"feature sets must be (n, dim) with equal dim: {a.shape} vs {b.shape}")
    dim = a.shape[1]
    for name, x in (("a", a), ("b", b)):
        if len(x) < dim + 1:
            raise ValueError(
                f"feature set {name} has {len(x)} samples; need at least dim+1={dim + 1} "
                "for a well-defined covariance"
            )
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False)
    cov_b = np.cov(b, rowvar=False)
    sqrt_b = _psd_sqrt(cov_b)
    inner = sqrt_b @ cov_a @ sqrt_b
    inner = (inner + inner.T) / 2.0
    cross_eigs = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    value = float(
        np.sum((mu_a - mu_b) ** 2)
        + np.trace(cov_a)
        + np.trace(cov_b)
        - 2.0 * np.sum(np.sqrt(cross_eigs))
    )
    return max(value, 0.0)


def _poly_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # elementwise-broadcast dot keeps entries bitwise stable under sample
    # permutation (no BLAS blocking), so reordering cannot move the result
    dim = x.shape[1]
    dots = (x[:, None, :] * y[None, :, :]).sum(axis=-1)
    return (dots / dim + 1.0) ** 3


def _unbiased_mmd2(x: np.ndarray, y: np.ndarray) -> float:
    n, m = len(x), len(y)
    kxx = _poly_kernel(x, x)
    kyy = _poly_kernel(y, y)
    kxy = _poly_kernel(x, y)
    sum_xx = math.fsum(kxx.ravel().tolist()) - math.fsum(np.diag(kxx).tolist())
    sum_yy = math.fsum(kyy.ravel().tolist()) - math.fsum(np.diag(kyy).tolist())
    sum_xy = math.fsum(kxy.ravel().tolist())
    return sum_xx / (n * (n - 1)) + sum_yy / (m * (m - 1)) - 2.0 * sum_xy / (n * m)


def kid(features_a: np.ndarray, features_b: np.ndarray, block_size: int = 100) -> float:
    """Unbiased kernel (MMD^2) distance with the cubic polynomial kernel
    k(x, y) = (x.y/dim + 1)^3, averaged over consecutive blocks."""
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("kid needs at least 2 samples per set")
    m = min(len(a), len(b))
    n_blocks = max(1, math.ceil(m / block_size))
    bounds = np.linspace(0, m, n_blocks + 1, dtype=int)
    values = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo < 2:
            continue
        values.append(_unbiased_mmd2(a[lo:hi], b[lo:hi]))
    return float(np.mean(values))


def vfid(clips_a, clips_b, extractor: FeatureExtractor) -> float:
    """Frechet distance over clip-level spatiotemporal features."""
    if extractor.kind not in ("random3d", "external"):
        raise ValueError("vfid needs a 3D (clip-level) extractor")
    return fid(extractor.extract(clips_a), extractor.extract(clips_b))


def clip_windows(frames: list, clip_len: int = 16) -> list[np.ndarray]:
    """Non-overlapping consecutive windows of ``clip_len`` frames, each as a
    (T, 3, H, W) array; the trailing remainder is dropped."""
    arrays = [f.data if isinstance(f, FrameImage) else np.asarray(f, np.float32) for f in frames]
    windows = []
    for start in range(0, len(arrays) - clip_len + 1, clip_len):
        windows.append(np.stack(arrays[start : start + clip_len]))
    return windows


def jitter(outputs: list, masks: list) -> tuple[float, list[np.ndarray]]:
    """Mean absolute difference between consecutive frames within masks.

    Per pair, the difference heatmap is |o_t - o_{t-1}| averaged over
    channels; the scalar averages each heatmap inside the union of the two
    binarized masks, then averages over pairs. Pairs whose mask union is
    empty are excluded from the scalar (edge rule; an appended duplicate
    frame with a nonempty mask contributes a zero-valued pair).
    """
    if len(outputs) != len(masks):
        raise ValueError(f"{len(outputs)} frames but {len(masks)} masks")
    if len(outputs) < 2:
        raise ValueError("jitter needs at least 2 frames")
    frames = [o.data if isinstance(o, FrameImage) else np.asarray(o, np.float32) for o in outputs]

    def as_binmask(m) -> np.ndarray:
        arr = m.data if isinstance(m, FrameImage) else np.asarray(m)
        if arr.ndim == 3:
            arr = arr[0]
        return arr >= 0.5

    binmasks = [as_binmask(m) for m in masks]
    heatmaps = []
    values = []
    for t in range(1, len(frames)):
        diff = np.abs(frames[t] - frames[t - 1]).mean(axis=0)
        heatmaps.append(diff.astype(np.float32))
        union = binmasks[t] | binmasks[t - 1]
        if union.any():
            values.append(float(diff[union].mean()))
    scalar = float(np.mean(values)) if values else 0.0
    return scalar, heatmaps


def export_jitter_heatmaps(heatmaps: list[np.ndarray], out_dir: str | Path, gain: float = 4.0) -> list[Path]:
    """Write grayscale magnitude-times-gain PNGs; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, hm in enumerate(heatmaps):
        frame = np.clip(hm * gain, 0.0, 1.0)
        path = out / f"jitter_{i:06d}.png"
        Image.fromarray((frame * 255).astype(np.uint8), mode="L").save(path)
        paths.append(path)
    return paths


@dataclass
class MetricReport:
    kid: float | None
    fid: float | None
    vfid: float | None
    jitter: float | None
    sample_counts: dict
    extractor_fingerprint: str
    jitter_gain: float = 4.0

    def __post_init__(self) -> None:
        for name in ("kid", "fid", "vfid", "jitter"):
            value = getattr(self, name)
            if value is None:
                continue
            if not math.isfinite(value):
                raise ValueError(f"{name} is not finite: {value}")
            floor = -KID_NEGATIVE_TOLERANCE if name == "kid" else 0.0
            if value < floor:
                raise ValueError(f"{name}={value} below sanity floor {floor}")

    def to_dict(self) -> dict:
        return {
            "kid": self.kid,
            "fid": self.fid,
            "vfid": self.vfid,
            "jitter": self.jitter,
            "sample_counts": self.sample_counts,
            "extractor_fingerprint": self.extractor_fingerprint,
            "jitter_gain": self.jitter_gain,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def compute_report(
    pred_frames: list,
    ref_frames: list,
    pred_masks: list | None = None,
    metrics: tuple[str, ...] = ("fid", "kid", "vfid", "jitter"),
    seed: int = 0,
    embedding_dim: int = 64,
    vfid_dim: int = 16,
    clip_len: int = 16,
) -> MetricReport:
    """End-to-end report between a predicted and a reference sequence."""
    extractor2d = FeatureExtractor("random2d", embedding_dim, seed)
    fingerprint = extractor2d.fingerprint
    fid_value = kid_value = vfid_value = jitter_value = None
    counts: dict = {"pred_frames": len(pred_frames), "ref_frames": len(ref_frames)}
    if "fid" in metrics or "kid" in metrics:
        feats_pred = extractor2d.extract(pred_frames)
        feats_ref = extractor2d.extract(ref_frames)
        if "fid" in metrics:
            fid_value = fid(feats_pred, feats_ref)
        if "kid" in metrics:
            kid_value = kid(feats_pred, feats_ref)
    if "vfid" in metrics:
        extractor3d = FeatureExtractor("random3d", vfid_dim, seed, clip_len=clip_len)
        fingerprint += f" + {extractor3d.fingerprint}"
        clips_pred = clip_windows(pred_frames, clip_len)
        clips_ref = clip_windows(ref_frames, clip_len)
        counts["pred_clips"] = len(clips_pred)
        counts["ref_clips"] = len(clips_ref)
        vfid_value = vfid(clips_pred, clips_ref, extractor3d)
    if "jitter" in metrics:
        if pred_masks is None:
            full = np.ones((1,) + tuple(np.asarray(
                pred_frames[0].data if isinstance(pred_frames[0], FrameImage) else pred_frames[0]
            ).shape[-2:]), dtype=np.float32)
            pred_masks = [MaskImage(full) for _ in pred_frames]
        jitter_value, _ = jitter(pred_frames, pred_masks)
    return MetricReport(
        kid=kid_value,
        fid=fid_value,
        vfid=vfid_value,
        jitter=jitter_value,
        sample_counts=counts,
        extractor_fingerprint=fingerprint,
    )
