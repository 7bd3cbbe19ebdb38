"""Live demo service: websocket sessions over the streaming runtime.

One websocket connection = one isolated try-on session. Incoming frames
obey a latest-wins policy: at most one frame waits while another is being
processed; a newer arrival replaces it and the replaced frame is answered
with a ``status {dropped: t}``. Control messages are never dropped and are
handled strictly in order relative to surviving frames, so a garment
switch is atomic with respect to frame processing.

In this repository perception is synthetic (a procedural pose track), so
push-mode overlays do not track the pushed pixels; replay mode streams a
recorded sequence directory whose poses are known. Real deployments swap
in a perception adapter and keep the wire contract unchanged.
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
from collections import deque
from pathlib import Path

import numpy as np
from fastapi import FastAPI
from PIL import Image
from starlette.concurrency import run_in_threadpool
from starlette.websockets import WebSocket, WebSocketDisconnect

from . import __version__
from .dataset import load_image_sequence
from .providers import SyntheticPerceptionProvider
from .rasters import FrameImage
from .runtime import TryOnSession
from .synthesis import GarmentSynthesisEstimator
from .synthetic import SyntheticGarmentSpec, generate_sequence

__all__ = ["make_app", "load_garments"]

MAX_SESSIONS_DEFAULT = 4


def load_garments(ckpt_dir: str | Path) -> dict[str, GarmentSynthesisEstimator]:
    """Load every ``*.ckpt`` in a directory, keyed by garment id."""
    garments = {}
    for path in sorted(Path(ckpt_dir).glob("*.ckpt")):
        est = GarmentSynthesisEstimator.load(path)
        garments[est.garment_id] = est
    if not garments:
        raise ValueError(f"{ckpt_dir}: no garment checkpoints (*.ckpt) found")
    return garments


def _encode_frame(frame: FrameImage) -> str:
    arr = np.round(frame.data * 255.0).astype(np.uint8)
    img = Image.fromarray(np.transpose(arr, (1, 2, 0)), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _decode_frame(data: str) -> FrameImage:
    raw = base64.b64decode(data.encode("ascii"), validate=True)
    with Image.open(io.BytesIO(raw)) as img:
        arr = np.asarray(img.convert("RGB")).astype(np.float32) / 255.0
    return FrameImage(np.transpose(arr, (2, 0, 1)), role="rgb")


class _Connection:
    """Per-websocket state machine; the processor task is the only owner of
    the session, so message effects apply strictly in order."""

    def __init__(self, ws: WebSocket, garments: dict, estimate_noise: float):
        self.ws = ws
        self.garments = garments
        self.estimate_noise = estimate_noise
        self.pending: deque[dict] = deque()
        self.wakeup = asyncio.Event()
        self.closed = False
        self.session: TryOnSession | None = None
        self.provider = None
        self.last_t = -1
        self.replay_frames: list[FrameImage] | None = None
        self.replay_pos = 0
        self.max_pending_seen = 0

    # -------------------------------------------------------------- queueing

    def _enqueue(self, text: str) -> None:
        try:
            msg = json.loads(text)
            if not isinstance(msg, dict) or "type" not in msg:
                raise ValueError("message must be an object with a 'type'")
        except (json.JSONDecodeError, ValueError) as exc:
            msg = {"type": "_malformed", "detail": str(exc)}
        if msg.get("type") == "frame":
            for i, item in enumerate(self.pending):
                if item.get("type") == "frame":
                    # latest wins: drop the older pending frame in place
                    self.pending[i] = {"type": "_dropped", "t": item.get("t")}
                    break
        self.pending.append(msg)
        frames_pending = sum(1 for m in self.pending if m.get("type") == "frame")
        self.max_pending_seen = max(self.max_pending_seen, frames_pending)
        self.wakeup.set()

    async def _reader(self) -> None:
        try:
            while True:
                text = await self.ws.receive_text()
                self._enqueue(text)
        except (WebSocketDisconnect, RuntimeError):
            self.closed = True
            self.wakeup.set()

    async def _send(self, payload: dict) -> None:
        if not self.closed:
            try:
                await self.ws.send_text(json.dumps(payload))
            except (WebSocketDisconnect, RuntimeError):
                self.closed = True

    async def _error(self, code: str, detail: str, t: int | None = None) -> None:
        payload = {"type": "error", "code": code, "detail": detail}
        if t is not None:
            payload["t"] = t
        await self._send(payload)

    # -------------------------------------------------------------- handlers

    def _garment_list(self) -> dict:
        items = [
            {
                "garment_id": gid,
                "resolution": list(est.resolution_),
                "variant": "recurrent" if est.recurrent else "per_frame",
            }
            for gid, est in self.garments.items()
        ]
        return {"type": "garment_list", "items": items}

    def _fresh_session(self, garment_id: str) -> None:
        est = self.garments[garment_id]
        self.session = TryOnSession(est, garment_id=garment_id)
        height, width = est.resolution_
        poses = [r.pose for r in generate_sequence(
            SyntheticGarmentSpec(style="tight"), 120, (height, width), seed=0
        )]
        self.provider = SyntheticPerceptionProvider(
            poses,
            SyntheticGarmentSpec(style="tight"),
            seed=0,
            resolution=(height, width),
            estimate_noise=self.estimate_noise,
            cycle=True,
        )

    async def _handle(self, msg: dict) -> None:
        kind = msg.get("type")
        if kind == "_malformed":
            await self._error("bad_message", msg["detail"])
        elif kind == "_dropped":
            await self._send({"type": "status", "dropped": msg.get("t")})
        elif kind == "select_garment":
            gid = msg.get("garment_id")
            if gid not in self.garments:
                await self._error("unknown_garment", f"no checkpoint for {gid!r}")
                return
            self._fresh_session(gid)
            await self._send({"type": "status", "selected": gid})
        elif kind == "reset_state":
            if self.session is not None:
                self.session.reset_state()
            await self._send({"type": "status", "reset": True})
        elif kind == "set_source":
            await self._handle_set_source(msg)
        elif kind == "frame":
            await self._handle_frame(msg)
        else:
            await self._error("bad_message", f"unknown message type {kind!r}")

    async def _handle_set_source(self, msg: dict) -> None:
        source = msg.get("source")
        if source == "push":
            self.replay_frames = None
            self.replay_pos = 0
            await self._send({"type": "status", "source": "push"})
        elif source == "replay":
            path = msg.get("path")
            if self.session is None:
                await self._error("no_garment", "select a garment before replay")
                return
            if not path or not Path(path).is_dir():
                await self._error("bad_source", f"replay path {path!r} is not a directory")
                return
            try:
                frames = load_image_sequence(path, ".raw.png")
                provider = SyntheticPerceptionProvider.from_directory(
                    path, estimate_noise=self.estimate_noise
                )
            except Exception as exc:
                await self._error("bad_source", str(exc))
                return
            self._fresh_session(self.session.garment_id)
            provider.cycle = True
            self.provider = provider
            self.replay_frames = frames
            self.replay_pos = 0
            await self._send({"type": "status", "source": "replay", "frames": len(frames)})
        else:
            await self._error("bad_message", f"unknown source {msg.get('source')!r}")

    def _server_fps(self) -> float:
        if self.session is None or not self.session.timings:
            return 0.0
        return 1000.0 / (sum(self.session.timings) / len(self.session.timings))

    async def _process_and_reply(self, frame: FrameImage, t: int) -> None:
        out = await run_in_threadpool(self.session.process_frame, frame, self.provider)
        await self._send(
            {
                "type": "tryon_frame",
                "data": _encode_frame(out),
                "t": t,
                "fps": round(self._server_fps(), 2),
                "flagged": self.session.last_flagged,
            }
        )

    async def _handle_frame(self, msg: dict) -> None:
        t = msg.get("t")
        if not isinstance(t, int) or t <= self.last_t:
            await self._error(
                "bad_t", f"frame t must be a strictly increasing integer, got {t!r}", t=t
            )
            return
        self.last_t = t
        if self.session is None:
            await self._error("no_garment", "select a garment before sending frames", t=t)
            return
        try:
            frame = _decode_frame(msg.get("data", ""))
        except Exception as exc:
            await self._error("decode_error", str(exc), t=t)
            return
        if frame.resolution != self.session.resolution:
            await self._error(
                "bad_frame",
                f"frame resolution {frame.resolution} does not match garment "
                f"network {self.session.resolution}",
                t=t,
            )
            return
        await self._process_and_reply(frame, t)

    async def _replay_step(self) -> None:
        frame = self.replay_frames[self.replay_pos]
        t = self.replay_pos
        self.replay_pos += 1
        await self._process_and_reply(frame, t)
        if self.replay_pos >= len(self.replay_frames):
            self.replay_frames = None
            self.replay_pos = 0
            await self._send({"type": "status", "replay_done": True})

    # -------------------------------------------------------------- lifecycle

    async def run(self) -> None:
        await self._send(self._garment_list())
        reader = asyncio.create_task(self._reader())
        try:
            while not self.closed:
                if self.pending:
                    await self._handle(self.pending.popleft())
                elif self.replay_frames is not None:
                    await self._replay_step()
                else:
                    await self.wakeup.wait()
                    self.wakeup.clear()
        finally:
            reader.cancel()


def make_app(
    ckpt_dir: str | Path | None = None,
    *,
    garments: dict[str, GarmentSynthesisEstimator] | None = None,
    estimate_noise: float = 0.6,
    max_sessions: int = MAX_SESSIONS_DEFAULT,
) -> FastAPI:
    """Build the demo application; supply ``ckpt_dir`` or pre-loaded
    ``garments``."""
    if garments is None:
        if ckpt_dir is None:
            raise ValueError("make_app needs a checkpoint directory or loaded garments")
        garments = load_garments(ckpt_dir)
    app = FastAPI(title="tryon demo service", version=__version__)
    app.state.garments = garments
    app.state.active = 0
    app.state.max_sessions = max_sessions

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/garments")
    def garment_list() -> dict:
        items = [
            {
                "garment_id": gid,
                "resolution": list(est.resolution_),
                "variant": "recurrent" if est.recurrent else "per_frame",
            }
            for gid, est in garments.items()
        ]
        return {"type": "garment_list", "items": items}

    @app.websocket("/tryon")
    async def tryon_socket(ws: WebSocket) -> None:
        await ws.accept()
        if app.state.active >= app.state.max_sessions:
            await ws.send_text(
                json.dumps(
                    {"type": "error", "code": "busy", "detail": "session cap reached"}
                )
            )
            await ws.close()
            return
        app.state.active += 1
        conn = _Connection(ws, garments, estimate_noise)
        try:
            await conn.run()
        finally:
            app.state.active -= 1

    return app
