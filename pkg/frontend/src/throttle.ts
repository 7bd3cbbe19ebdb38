// Adaptive capture-rate limiter: never send faster than twice the
// server-reported fps, so the client cooperates with the server's
// latest-wins drop policy instead of flooding it.

export class SendRateLimiter {
  private serverFps: number | null = null;
  private lastSentMs = -Infinity;

  constructor(private readonly initialMaxFps: number = 15) {}

  noteServerFps(fps: number): void {
    if (Number.isFinite(fps) && fps > 0) {
      this.serverFps = fps;
    }
  }

  maxSendFps(): number {
    return this.serverFps === null ? this.initialMaxFps : 2 * this.serverFps;
  }

  /** True when a frame may be sent now; records the send when allowed. */
  allow(nowMs: number): boolean {
    const minIntervalMs = 1000 / this.maxSendFps();
    if (nowMs - this.lastSentMs >= minIntervalMs) {
      this.lastSentMs = nowMs;
      return true;
    }
    return false;
  }
}
