import { describe, expect, it } from "vitest";

import { parseServerMessage } from "../src/protocol.js";

describe("parseServerMessage", () => {
  it("parses every server message kind", () => {
    expect(
      parseServerMessage(JSON.stringify({ type: "garment_list", items: [] })),
    ).toMatchObject({ type: "garment_list" });
    expect(
      parseServerMessage(JSON.stringify({ type: "tryon_frame", data: "aGk=", t: 3, fps: 9.5 })),
    ).toMatchObject({ t: 3 });
    expect(parseServerMessage(JSON.stringify({ type: "status", reset: true }))).toMatchObject({
      type: "status",
    });
    expect(
      parseServerMessage(JSON.stringify({ type: "error", code: "busy", detail: "cap" })),
    ).toMatchObject({ code: "busy" });
  });

  it("rejects garbage without throwing", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage('"just a string"')).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "wat" }))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "tryon_frame", data: 5, t: "x" }))).toBeNull();
  });
});
