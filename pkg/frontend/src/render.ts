// Canvas rendering of composited frames, raw echo and side-by-side view.
// Raw frames are remembered by t so side-by-side panes show the same
// instant even though server replies arrive later.

import type { ViewMode } from "./state.js";

const RAW_CACHE_LIMIT = 60;

export class FrameRenderer {
  private readonly ctx: CanvasRenderingContext2D | null;
  private readonly rawByT = new Map<number, string>();

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.ctx = canvas.getContext("2d");
  }

  noteRawFrame(t: number, base64: string): void {
    this.rawByT.set(t, base64);
    if (this.rawByT.size > RAW_CACHE_LIMIT) {
      const oldest = this.rawByT.keys().next().value;
      if (oldest !== undefined) this.rawByT.delete(oldest);
    }
  }

  draw(t: number, compositedBase64: string, mode: ViewMode): void {
    if (this.ctx === null) return;
    const raw = this.rawByT.get(t) ?? null;
    for (const key of this.rawByT.keys()) {
      if (key <= t) this.rawByT.delete(key);
    }
    const { width, height } = this.canvas;
    const ctx = this.ctx;
    const composited = new Image();
    composited.onload = () => {
      ctx.clearRect(0, 0, width, height);
      if (mode === "composited" || raw === null) {
        ctx.drawImage(composited, 0, 0, width, height);
        return;
      }
      const rawImg = new Image();
      rawImg.onload = () => {
        if (mode === "raw") {
          ctx.drawImage(rawImg, 0, 0, width, height);
        } else {
          ctx.drawImage(rawImg, 0, 0, width / 2, height);
          ctx.drawImage(composited, width / 2, 0, width / 2, height);
        }
      };
      rawImg.src = `data:image/png;base64,${raw}`;
    };
    composited.src = `data:image/png;base64,${compositedBase64}`;
  }
}
