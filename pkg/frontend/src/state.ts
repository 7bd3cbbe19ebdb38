// UI session state: the single source of truth the DOM renders from.
// Frames are gated to be strictly t-monotone, every displayed metric comes
// from server messages, and user-visible events surface as toasts.

import type { GarmentItem, ServerMessage, TryonFrameMessage } from "./protocol.js";

export type ViewMode = "composited" | "raw" | "side-by-side";
export type Source = "camera" | "replay";
export type Connection = "connecting" | "open" | "closed";

export interface Toast {
  message: string;
  atMs: number;
}

export interface RenderableFrame {
  t: number;
  data: string;
  fps: number;
  flagged: boolean;
}

const LATENCY_WINDOW = 30;

export class UiSessionState {
  connection: Connection = "connecting";
  garments: GarmentItem[] = [];
  selectedGarment: string | null = null;
  serverFps = 0;
  latenciesMs: number[] = [];
  viewMode: ViewMode = "composited";
  source: Source = "camera";
  lastRenderedT = -1;
  staleDiscards = 0;
  droppedByServer = 0;
  toasts: Toast[] = [];
  errors: string[] = [];
  reconnectInMs: number | null = null;

  private toast(message: string, atMs: number): void {
    this.toasts.push({ message, atMs });
  }

  onOpen(): void {
    this.connection = "open";
    this.reconnectInMs = null;
  }

  onClose(reconnectInMs: number): void {
    this.connection = "closed";
    this.reconnectInMs = reconnectInMs;
  }

  /**
   * Fold one server message into the state. Returns a frame to render, or
   * null (control message, or a stale frame that must not be rendered).
   */
  applyServer(msg: ServerMessage, nowMs: number): RenderableFrame | null {
    switch (msg.type) {
      case "garment_list":
        this.garments = msg.items;
        if (
          this.selectedGarment !== null &&
          !msg.items.some((item) => item.garment_id === this.selectedGarment)
        ) {
          this.selectedGarment = null;
        }
        return null;
      case "tryon_frame":
        return this.applyFrame(msg);
      case "status":
        this.applyStatus(msg as Record<string, unknown>, nowMs);
        return null;
      case "error":
        this.errors.push(`${msg.code}: ${msg.detail}`);
        this.toast(`server error ${msg.code}: ${msg.detail}`, nowMs);
        return null;
    }
  }

  private applyFrame(msg: TryonFrameMessage): RenderableFrame | null {
    if (msg.t <= this.lastRenderedT) {
      this.staleDiscards += 1;
      return null;
    }
    this.lastRenderedT = msg.t;
    if (msg.fps > 0) {
      this.serverFps = msg.fps;
      this.latenciesMs.push(1000 / msg.fps);
      if (this.latenciesMs.length > LATENCY_WINDOW) {
        this.latenciesMs.shift();
      }
    }
    return { t: msg.t, data: msg.data, fps: this.serverFps, flagged: msg.flagged === true };
  }

  private applyStatus(status: Record<string, unknown>, nowMs: number): void {
    if (typeof status.selected === "string") {
      this.selectedGarment = status.selected;
      this.toast(`garment: ${status.selected}`, nowMs);
    }
    if (status.reset === true) {
      this.toast("state reset", nowMs);
    }
    if ("dropped" in status) {
      this.droppedByServer += 1;
    }
    if (status.source === "replay" || status.source === "push") {
      this.source = status.source === "replay" ? "replay" : "camera";
      // a source switch starts a fresh server-side stream at t = 0
      this.lastRenderedT = -1;
    }
    if (status.replay_done === true) {
      this.toast("replay finished", nowMs);
    }
  }

  pickerItems(): GarmentItem[] {
    return this.garments;
  }

  meanLatencyMs(): number {
    if (this.latenciesMs.length === 0) return 0;
    return this.latenciesMs.reduce((a, b) => a + b, 0) / this.latenciesMs.length;
  }
}
