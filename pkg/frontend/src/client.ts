// Websocket client with auto-reconnect and send-rate throttling.
// The socket constructor and clock are injectable so the client is fully
// testable without a browser or a live server.

import type { ClientMessage, ServerMessage } from "./protocol.js";
import { parseServerMessage } from "./protocol.js";
import { SendRateLimiter } from "./throttle.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export interface ClientOptions {
  url: string;
  socketFactory?: (url: string) => SocketLike;
  now?: () => number;
  schedule?: (fn: () => void, ms: number) => void;
  initialMaxFps?: number;
  onMessage: (msg: ServerMessage) => void;
  onOpen?: () => void;
  onClose?: (reconnectInMs: number) => void;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_CAP_MS = 10_000;

export class TryOnClient {
  readonly limiter: SendRateLimiter;
  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private nextT = 0;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => void;
  private readonly socketFactory: (url: string) => SocketLike;

  constructor(private readonly options: ClientOptions) {
    this.limiter = new SendRateLimiter(options.initialMaxFps ?? 15);
    this.now = options.now ?? (() => Date.now());
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.socketFactory =
      options.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike);
  }

  connect(): void {
    this.stopped = false;
    const socket = this.socketFactory(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.options.onOpen?.();
    };
    socket.onmessage = (event) => {
      const msg = parseServerMessage(event.data);
      if (msg === null) return;
      if (msg.type === "tryon_frame" && msg.fps > 0) {
        this.limiter.noteServerFps(msg.fps);
      }
      this.options.onMessage(msg);
    };
    socket.onclose = () => {
      this.socket = null;
      if (this.stopped) return;
      const delay = this.backoffMs();
      this.options.onClose?.(delay);
      this.schedule(() => this.connect(), delay);
    };
  }

  backoffMs(): number {
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_CAP_MS);
    this.attempts += 1;
    return delay;
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  private sendRaw(msg: ClientMessage): boolean {
    if (this.socket === null) return false;
    this.socket.send(JSON.stringify(msg));
    return true;
  }

  selectGarment(garmentId: string): boolean {
    return this.sendRaw({ type: "select_garment", garment_id: garmentId });
  }

  resetState(): boolean {
    return this.sendRaw({ type: "reset_state" });
  }

  setSource(source: "push" | "replay", path?: string): boolean {
    return this.sendRaw(
      path === undefined ? { type: "set_source", source } : { type: "set_source", source, path },
    );
  }

  /**
   * Throttled frame send: silently refuses when the rate limiter says the
   * wire is saturated (the capture loop just tries again next tick).
   * Frame timestamps are generated client-side and strictly increase.
   */
  trySendFrame(data: string): number | null {
    if (this.socket === null || !this.limiter.allow(this.now())) return null;
    const t = this.nextT;
    this.nextT += 1;
    this.sendRaw({ type: "frame", data, t });
    return t;
  }
}
