"""Streaming try-on inference: perception, synthesis, compositing.

A :class:`TryOnSession` owns exactly one logical stream: the recurrent
state, a frame counter and timing telemetry. Memory use is independent of
how many frames have been processed -- the state pair is the only carryover.
Provider failures degrade gracefully (frame passes through uncomposited)
and sustained failure auto-resets the state so a stale stream never bleeds
into the next user.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import psutil

from .providers import PerceptionProvider, ProviderError
from .rasters import FrameImage, MaskImage, RasterError, concat_channels, semantic_map_to_rgb
from .synthesis import GarmentSynthesisEstimator, RecurrentState
from .validation import check_frame_image

__all__ = ["composite", "TryOnSession", "FpsReport", "bench_fps", "process_frame", "reset_state"]


def composite(frame: FrameImage, garment: FrameImage, mask: MaskImage) -> FrameImage:
    """Alpha-blend the synthesized garment onto the input frame:
    ``out = frame * (1 - mask) + garment * mask``, pixelwise."""
    frame = check_frame_image(frame, role="rgb", name="frame")
    garment = check_frame_image(garment, role="rgb", name="garment")
    if not isinstance(mask, MaskImage):
        mask = MaskImage(np.asarray(mask.data if isinstance(mask, FrameImage) else mask))
    if frame.resolution != garment.resolution or frame.resolution != mask.resolution:
        raise RasterError(
            f"compositing resolution mismatch: frame {frame.resolution}, "
            f"garment {garment.resolution}, mask {mask.resolution}"
        )
    m = mask.data
    out = frame.data * (1.0 - m) + garment.data * m
    return FrameImage(out, role="rgb")


@dataclass
class TryOnSession:
    """One live try-on stream bound to a trained garment synthesizer."""

    synthesizer: GarmentSynthesisEstimator
    garment_id: str = ""
    auto_reset_after: int = 15
    timing_window: int = 120

    frame_counter: int = field(default=0, init=False)
    state: RecurrentState = field(init=False)
    events: list[dict] = field(default_factory=list, init=False)
    last_flagged: bool = field(default=False, init=False)
    last_mask: MaskImage | None = field(default=None, init=False)
    last_stage_ms: dict = field(default_factory=dict, init=False)

    def __post_init__(self) -> None:
        self.garment_id = self.garment_id or self.synthesizer.garment_id
        self.state = self.synthesizer.zero_state()
        self.timings = deque(maxlen=self.timing_window)
        self._consecutive_failures = 0

    @property
    def resolution(self) -> tuple[int, int]:
        return self.synthesizer.resolution_

    def reset_state(self) -> None:
        """Zero the recurrent state; the frame counter keeps running."""
        self.state = self.synthesizer.zero_state()
        self.events.append({"event": "state_reset", "frame": self.frame_counter})

    def process_frame(self, frame: FrameImage, provider: PerceptionProvider) -> FrameImage:
        """Run one frame through perception, synthesis and compositing.

        On provider failure the input frame is returned unchanged and
        flagged; after ``auto_reset_after`` consecutive failures the
        recurrent state is zeroed (tracking was lost for too long).
        """
        frame = check_frame_image(frame, role="rgb", name="frame")
        if frame.resolution != self.resolution:
            raise RasterError(
                f"session expects frames at {self.resolution}, got {frame.resolution}"
            )
        index = self.frame_counter
        t0 = time.perf_counter()
        try:
            vm = provider.vm(index)
            semantic = provider.semantic_direct(index)
        except ProviderError as exc:
            self.frame_counter += 1
            self.last_flagged = True
            self.last_mask = None
            self._consecutive_failures += 1
            self.events.append({"event": "provider_failure", "frame": index, "detail": str(exc)})
            if self._consecutive_failures >= self.auto_reset_after:
                self.reset_state()
                self._consecutive_failures = 0
            return frame
        t1 = time.perf_counter()
        hybrid = concat_channels(vm, semantic_map_to_rgb(semantic), role="hybrid")
        garment, mask, self.state = self.synthesizer.step(hybrid, self.state)
        t2 = time.perf_counter()
        out = composite(frame, garment, mask)
        t3 = time.perf_counter()

        self.frame_counter += 1
        self.last_flagged = False
        self.last_mask = mask
        self._consecutive_failures = 0
        self.last_stage_ms = {
            "perception": (t1 - t0) * 1e3,
            "synthesis": (t2 - t1) * 1e3,
            "composite": (t3 - t2) * 1e3,
        }
        self.timings.append((t3 - t0) * 1e3)
        return out


def process_frame(session: TryOnSession, frame: FrameImage, provider: PerceptionProvider) -> FrameImage:
    return session.process_frame(frame, provider)


def reset_state(session: TryOnSession) -> TryOnSession:
    session.reset_state()
    return session


@dataclass
class FpsReport:
    mean_fps: float
    p50_ms: float
    p95_ms: float
    peak_mb: float
    stage_breakdown: dict
    frames: int

    def to_dict(self) -> dict:
        return {
            "mean_fps": self.mean_fps,
            "p50_ms": self.p50_ms,
            "p95_ms": self.p95_ms,
            "peak_mb": self.peak_mb,
            "stage_breakdown": self.stage_breakdown,
            "frames": self.frames,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def bench_fps(
    session: TryOnSession,
    frames: list[FrameImage] | int,
    provider: PerceptionProvider,
    warmup: int = 10,
) -> FpsReport:
    """Wall-clock benchmark of the full per-frame pipeline.

    ``frames`` may be decoded images or a count (frames are then pulled
    from the provider's recorded sequence, cycling if needed). The first
    ``warmup`` frames are excluded from statistics; RSS is sampled per
    frame for the peak-memory figure.
    """
    if isinstance(frames, int):
        count = frames
        inputs = None
    else:
        count = len(frames)
        inputs = frames
    if count < 30:
        raise ValueError(f"benchmark needs at least 30 frames, got {count}")
    process = psutil.Process()
    latencies = []
    stage_totals = {"perception": 0.0, "synthesis": 0.0, "composite": 0.0}
    peak_rss = 0
    measured = 0
    blank = None
    for i in range(count):
        if inputs is not None:
            frame = inputs[i]
        else:
            if blank is None:
                h, w = session.resolution
                blank = FrameImage(np.full((3, h, w), 0.5, dtype=np.float32), role="rgb")
            frame = blank
        t0 = time.perf_counter()
        session.process_frame(frame, provider)
        elapsed = (time.perf_counter() - t0) * 1e3
        peak_rss = max(peak_rss, process.memory_info().rss)
        if i >= warmup:
            measured += 1
            latencies.append(elapsed)
            for stage, ms in session.last_stage_ms.items():
                stage_totals[stage] += ms
    lat = np.array(latencies)
    return FpsReport(
        mean_fps=float(1000.0 * measured / lat.sum()),
        p50_ms=float(np.percentile(lat, 50)),
        p95_ms=float(np.percentile(lat, 95)),
        peak_mb=float(peak_rss / (1024.0 * 1024.0)),
        stage_breakdown={k: v / max(measured, 1) for k, v in stage_totals.items()},
        frames=measured,
    )
