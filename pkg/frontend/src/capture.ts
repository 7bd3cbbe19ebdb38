// Camera capture: webcam -> downscaled canvas -> base64 PNG frames.

export interface CaptureHandle {
  grab(): string | null;
  stop(): void;
}

export async function startCamera(
  video: HTMLVideoElement,
  width: number,
  height: number,
): Promise<CaptureHandle> {
  const stream = await navigator.mediaDevices.getUserMedia({
    video: { width: { ideal: 640 }, height: { ideal: 480 } },
    audio: false,
  });
  video.srcObject = stream;
  video.muted = true;
  await video.play();

  const canvas = document.createElement("canvas");
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d");

  return {
    grab(): string | null {
      if (ctx === null || video.readyState < 2) return null;
      ctx.drawImage(video, 0, 0, width, height);
      // strip the data-url prefix; the wire carries bare base64 PNG bytes
      return canvas.toDataURL("image/png").split(",", 2)[1] ?? null;
    },
    stop(): void {
      stream.getTracks().forEach((track) => track.stop());
    },
  };
}
