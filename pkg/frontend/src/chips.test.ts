import { describe, expect, it } from "vitest";

import { chipData, rgbToHex } from "./chips.js";

describe("chips", () => {
  it("hex equals the API payload exactly", () => {
    expect(rgbToHex([15, 40, 140])).toBe("#0f288c");
    expect(rgbToHex([0, 0, 0])).toBe("#000000");
    expect(rgbToHex([255, 255, 255])).toBe("#ffffff");
    expect(rgbToHex([250, 210, 40])).toBe("#fad228");
  });

  it("maps source colors without transforming values", () => {
    const chips = chipData([
      { rgb: [200, 35, 45], confidence: 1.0, element_id: "e0" },
      { rgb: [25, 70, 210], confidence: 0.6, element_id: "e3" },
    ]);
    expect(chips).toEqual([
      { hex: "#c8232d", confidence: "1.00", elementId: "e0" },
      { hex: "#1946d2", confidence: "0.60", elementId: "e3" },
    ]);
  });
});
