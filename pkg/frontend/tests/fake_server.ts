// In-memory fake of the demo service, speaking the exact wire schema.
// Used by the end-to-end UI tests; replay mode streams canned frames.

import type { SocketLike } from "../src/client.js";

export interface FakeServerOptions {
  garments?: { garment_id: string; resolution: [number, number]; variant: string }[];
  replayFrames?: { data: string }[];
  serverFps?: number;
}

export class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  sent: string[] = [];
  closedByClient = false;

  constructor(private readonly server: FakeServer) {}

  send(data: string): void {
    this.sent.push(data);
    this.server.receive(this, data);
  }

  close(): void {
    this.closedByClient = true;
    this.onclose?.();
  }

  // --- server side helpers ---
  serverPush(payload: unknown): void {
    this.onmessage?.({ data: JSON.stringify(payload) });
  }

  serverOpen(): void {
    this.onopen?.();
  }

  serverDrop(): void {
    this.onclose?.();
  }
}

export class FakeServer {
  sockets: FakeSocket[] = [];
  selected: string | null = null;
  frameLog: { t: number; data: string }[] = [];
  private readonly options: Required<FakeServerOptions>;

  constructor(options: FakeServerOptions = {}) {
    this.options = {
      garments: options.garments ?? [
        { garment_id: "skirt", resolution: [96, 72], variant: "recurrent" },
        { garment_id: "jacket", resolution: [96, 72], variant: "recurrent" },
      ],
      replayFrames: options.replayFrames ?? [],
      serverFps: options.serverFps ?? 10,
    };
  }

  factory = (_url: string): SocketLike => {
    const socket = new FakeSocket(this);
    this.sockets.push(socket);
    return socket;
  };

  /** Open the most recent socket and deliver the garment list. */
  openLatest(): FakeSocket {
    const socket = this.sockets[this.sockets.length - 1];
    if (socket === undefined) throw new Error("no socket to open");
    socket.serverOpen();
    socket.serverPush({ type: "garment_list", items: this.options.garments });
    return socket;
  }

  receive(socket: FakeSocket, text: string): void {
    const msg = JSON.parse(text) as Record<string, unknown>;
    switch (msg.type) {
      case "select_garment": {
        const id = msg.garment_id as string;
        if (this.options.garments.some((g) => g.garment_id === id)) {
          this.selected = id;
          socket.serverPush({ type: "status", selected: id });
        } else {
          socket.serverPush({ type: "error", code: "unknown_garment", detail: `no ${id}` });
        }
        break;
      }
      case "reset_state":
        socket.serverPush({ type: "status", reset: true });
        break;
      case "set_source":
        if (msg.source === "replay") {
          socket.serverPush({
            type: "status",
            source: "replay",
            frames: this.options.replayFrames.length,
          });
          this.options.replayFrames.forEach((frame, t) => {
            socket.serverPush({
              type: "tryon_frame",
              data: frame.data,
              t,
              fps: this.options.serverFps,
            });
          });
          socket.serverPush({ type: "status", replay_done: true });
        } else {
          socket.serverPush({ type: "status", source: "push" });
        }
        break;
      case "frame": {
        const t = msg.t as number;
        this.frameLog.push({ t, data: msg.data as string });
        socket.serverPush({
          type: "tryon_frame",
          data: msg.data,
          t,
          fps: this.options.serverFps,
        });
        break;
      }
      default:
        socket.serverPush({ type: "error", code: "bad_message", detail: "unknown type" });
    }
  }
}
