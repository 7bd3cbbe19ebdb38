// DOM wiring for the live mirror: picker, live view, controls, telemetry.

import { startCamera, type CaptureHandle } from "./capture.js";
import { TryOnClient } from "./client.js";
import { FrameRenderer } from "./render.js";
import { UiSessionState, type ViewMode } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const WS_URL = `ws://${location.host}/tryon`;
const TOAST_MS = 2500;

export function boot(): void {
  const state = new UiSessionState();
  const renderer = new FrameRenderer(el<HTMLCanvasElement>("view"));
  const picker = el<HTMLSelectElement>("garment-picker");
  const banner = el<HTMLDivElement>("banner");
  const fpsGauge = el<HTMLSpanElement>("fps");
  const latencyGauge = el<HTMLSpanElement>("latency");
  const toastBox = el<HTMLDivElement>("toasts");
  let capture: CaptureHandle | null = null;

  function refreshPicker(): void {
    picker.innerHTML = "";
    for (const item of state.pickerItems()) {
      const option = document.createElement("option");
      option.value = item.garment_id;
      option.textContent = `${item.garment_id} (${item.resolution[1]}x${item.resolution[0]})`;
      option.selected = item.garment_id === state.selectedGarment;
      picker.appendChild(option);
    }
  }

  function refreshBanner(): void {
    if (state.connection === "open") {
      banner.hidden = true;
    } else {
      banner.hidden = false;
      banner.textContent =
        state.reconnectInMs === null
          ? "connecting..."
          : `connection lost, retrying in ${Math.round(state.reconnectInMs / 1000)}s`;
    }
  }

  function showToasts(nowMs: number): void {
    toastBox.innerHTML = "";
    for (const toast of state.toasts.slice(-4)) {
      if (nowMs - toast.atMs < TOAST_MS) {
        const div = document.createElement("div");
        div.className = "toast";
        div.textContent = toast.message;
        toastBox.appendChild(div);
      }
    }
  }

  const client = new TryOnClient({
    url: WS_URL,
    onOpen: () => {
      state.onOpen();
      refreshBanner();
    },
    onClose: (delay) => {
      state.onClose(delay);
      refreshBanner();
    },
    onMessage: (msg) => {
      const frame = state.applyServer(msg, performance.now());
      if (msg.type === "garment_list") refreshPicker();
      if (msg.type === "status") refreshPicker();
      if (frame !== null) {
        renderer.draw(frame.t, frame.data, state.viewMode);
        fpsGauge.textContent = frame.fps.toFixed(1);
        latencyGauge.textContent = `${state.meanLatencyMs().toFixed(0)} ms`;
      }
      showToasts(performance.now());
    },
  });
  client.connect();

  picker.addEventListener("change", () => {
    client.selectGarment(picker.value);
  });
  el<HTMLButtonElement>("reset").addEventListener("click", () => {
    client.resetState();
  });
  for (const mode of ["composited", "raw", "side-by-side"] as ViewMode[]) {
    el<HTMLButtonElement>(`mode-${mode}`).addEventListener("click", () => {
      state.viewMode = mode;
    });
  }
  el<HTMLButtonElement>("replay").addEventListener("click", () => {
    const path = el<HTMLInputElement>("replay-path").value.trim();
    if (path.length > 0) client.setSource("replay", path);
  });
  el<HTMLButtonElement>("camera").addEventListener("click", () => {
    client.setSource("push");
  });

  el<HTMLButtonElement>("start-camera").addEventListener("click", async () => {
    const item = state.garments.find((g) => g.garment_id === state.selectedGarment);
    const [height, width] = item ? item.resolution : [96, 72];
    capture = await startCamera(el<HTMLVideoElement>("webcam"), width, height);
    const loop = (): void => {
      if (capture !== null && state.connection === "open" && state.source === "camera") {
        const data = capture.grab();
        if (data !== null) {
          const t = client.trySendFrame(data);
          if (t !== null) renderer.noteRawFrame(t, data);
        }
      }
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  });
}

boot();
