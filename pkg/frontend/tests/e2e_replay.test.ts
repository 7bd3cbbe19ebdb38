// End-to-end UI behavior in replay mode against the fake wire-exact server:
// picker mirrors the garment list, reset raises a toast, rendering stays
// t-monotone, and capture sends stay under twice the server fps.

import { describe, expect, it } from "vitest";

import { TryOnClient } from "../src/client.js";
import { UiSessionState, type RenderableFrame } from "../src/state.js";
import { FakeServer, FakeSocket } from "./fake_server.js";

function bootUi(server: FakeServer, now: () => number) {
  const state = new UiSessionState();
  const rendered: RenderableFrame[] = [];
  const client = new TryOnClient({
    url: "ws://test/tryon",
    socketFactory: server.factory,
    now,
    schedule: () => {},
    onMessage: (msg) => {
      const frame = state.applyServer(msg, now());
      if (frame !== null) rendered.push(frame);
    },
    onOpen: () => state.onOpen(),
    onClose: (ms) => state.onClose(ms),
  });
  client.connect();
  return { state, client, rendered };
}

describe("replay-mode end to end", () => {
  it("runs the full scripted session", () => {
    let nowMs = 0;
    const replayFrames = Array.from({ length: 6 }, (_, i) => ({ data: `replay-${i}` }));
    const server = new FakeServer({ replayFrames, serverFps: 10 });
    const { state, client, rendered } = bootUi(server, () => nowMs);
    const socket = server.openLatest();

    // picker mirrors the server's garment list exactly
    expect(state.pickerItems().map((g) => g.garment_id)).toEqual(["skirt", "jacket"]);

    client.selectGarment("skirt");
    expect(state.selectedGarment).toBe("skirt");

    // reset button -> status -> visible toast
    client.resetState();
    expect(state.toasts.some((t) => t.message === "state reset")).toBe(true);

    // replay streams all frames in order and finishes
    client.setSource("replay", "/replays/skirt");
    expect(state.source).toBe("replay");
    expect(rendered.map((f) => f.t)).toEqual([0, 1, 2, 3, 4, 5]);
    expect(state.toasts.some((t) => t.message === "replay finished")).toBe(true);

    // a stale frame after the replay is discarded, monotonicity holds
    (socket as FakeSocket).serverPush({ type: "tryon_frame", data: "old", t: 2, fps: 10 });
    expect(rendered.map((f) => f.t)).toEqual([0, 1, 2, 3, 4, 5]);
    expect(state.staleDiscards).toBe(1);

    // fps gauge traces the server-reported value
    expect(state.serverFps).toBe(10);
  });

  it("keeps the capture send rate at or under twice the server fps", () => {
    let nowMs = 0;
    const server = new FakeServer({ serverFps: 10 });
    const { client } = bootUi(server, () => nowMs);
    server.openLatest();
    client.selectGarment("skirt");
    nowMs = 1000;
    client.trySendFrame("prime"); // reply carries fps=10 -> limiter locks to 20 fps
    const sentBefore = server.frameLog.length;
    for (; nowMs <= 6000; nowMs += 4) {
      client.trySendFrame("camera-frame");
    }
    const sent = server.frameLog.length - sentBefore;
    expect(sent).toBeLessThanOrEqual(2 * 10 * 5 + 1);
  });

  it("recovers selection flow after a connection drop", () => {
    let nowMs = 0;
    const server = new FakeServer();
    const { state, rendered } = bootUi(server, () => nowMs);
    server.openLatest();
    expect(state.connection).toBe("open");
    server.sockets[0]!.serverDrop();
    expect(state.connection).toBe("closed");
    expect(state.reconnectInMs).toBe(500);
    expect(rendered).toEqual([]);
  });
});
