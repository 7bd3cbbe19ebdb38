import { describe, expect, it } from "vitest";

import type { GarmentItem } from "../src/protocol.js";
import { UiSessionState } from "../src/state.js";

const GARMENTS: GarmentItem[] = [
  { garment_id: "skirt", resolution: [96, 72], variant: "recurrent" },
  { garment_id: "jacket", resolution: [96, 72], variant: "per_frame" },
];

function frame(t: number, fps = 10): { type: "tryon_frame"; data: string; t: number; fps: number } {
  return { type: "tryon_frame", data: `frame-${t}`, t, fps };
}

describe("UiSessionState", () => {
  it("mirrors the server garment list exactly", () => {
    const state = new UiSessionState();
    state.applyServer({ type: "garment_list", items: GARMENTS }, 0);
    expect(state.pickerItems()).toEqual(GARMENTS);
  });

  it("never renders frames out of order", () => {
    const state = new UiSessionState();
    expect(state.applyServer(frame(0), 0)).not.toBeNull();
    expect(state.applyServer(frame(3), 0)).not.toBeNull();
    expect(state.applyServer(frame(2), 0)).toBeNull(); // stale: discarded
    expect(state.applyServer(frame(3), 0)).toBeNull(); // duplicate: discarded
    expect(state.applyServer(frame(4), 0)).not.toBeNull();
    expect(state.staleDiscards).toBe(2);
    expect(state.lastRenderedT).toBe(4);
  });

  it("derives fps and latency from server-reported values only", () => {
    const state = new UiSessionState();
    state.applyServer(frame(0, 8), 0);
    state.applyServer(frame(1, 12), 0);
    expect(state.serverFps).toBe(12);
    expect(state.meanLatencyMs()).toBeCloseTo((1000 / 8 + 1000 / 12) / 2, 6);
  });

  it("exactly one garment selected at a time", () => {
    const state = new UiSessionState();
    state.applyServer({ type: "garment_list", items: GARMENTS }, 0);
    state.applyServer({ type: "status", selected: "skirt" }, 0);
    expect(state.selectedGarment).toBe("skirt");
    state.applyServer({ type: "status", selected: "jacket" }, 0);
    expect(state.selectedGarment).toBe("jacket");
  });

  it("reset status raises a toast", () => {
    const state = new UiSessionState();
    state.applyServer({ type: "status", reset: true }, 42);
    expect(state.toasts.some((toast) => toast.message === "state reset")).toBe(true);
  });

  it("surfaces server errors verbatim", () => {
    const state = new UiSessionState();
    state.applyServer({ type: "error", code: "busy", detail: "session cap reached" }, 0);
    expect(state.errors).toContain("busy: session cap reached");
  });

  it("counts server-side drops", () => {
    const state = new UiSessionState();
    state.applyServer({ type: "status", dropped: 4 }, 0);
    state.applyServer({ type: "status", dropped: 7 }, 0);
    expect(state.droppedByServer).toBe(2);
  });

  it("source switch restarts the monotone gate", () => {
    const state = new UiSessionState();
    state.applyServer(frame(5), 0);
    state.applyServer({ type: "status", source: "replay", frames: 6 }, 0);
    expect(state.source).toBe("replay");
    expect(state.applyServer(frame(0), 0)).not.toBeNull();
  });

  it("tracks connection and reconnect countdown", () => {
    const state = new UiSessionState();
    state.onOpen();
    expect(state.connection).toBe("open");
    state.onClose(1500);
    expect(state.connection).toBe("closed");
    expect(state.reconnectInMs).toBe(1500);
  });
});
