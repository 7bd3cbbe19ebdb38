// Wire schema for the try-on demo service websocket.

export interface GarmentItem {
  garment_id: string;
  resolution: [number, number];
  variant: string;
}

export type ClientMessage =
  | { type: "select_garment"; garment_id: string }
  | { type: "reset_state" }
  | { type: "frame"; data: string; t: number }
  | { type: "set_source"; source: "push" | "replay"; path?: string };

export interface GarmentListMessage {
  type: "garment_list";
  items: GarmentItem[];
}

export interface TryonFrameMessage {
  type: "tryon_frame";
  data: string;
  t: number;
  fps: number;
  flagged?: boolean;
}

export interface StatusMessage {
  type: "status";
  [key: string]: unknown;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
  t?: number;
}

export type ServerMessage =
  | GarmentListMessage
  | TryonFrameMessage
  | StatusMessage
  | ErrorMessage;

export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as { type?: unknown };
  switch (msg.type) {
    case "garment_list": {
      const items = (msg as GarmentListMessage).items;
      return Array.isArray(items) ? (msg as GarmentListMessage) : null;
    }
    case "tryon_frame": {
      const frame = msg as TryonFrameMessage;
      return typeof frame.t === "number" && typeof frame.data === "string"
        ? frame
        : null;
    }
    case "status":
      return msg as StatusMessage;
    case "error": {
      const err = msg as ErrorMessage;
      return typeof err.code === "string" ? err : null;
    }
    default:
      return null;
  }
}
