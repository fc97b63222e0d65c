// Source-color chip data: pure mapping from API payload to display values.

import type { SourceColor } from "./api.js";

export function rgbToHex(rgb: number[]): string {
  const [r, g, b] = rgb;
  const part = (v: number) => v.toString(16).padStart(2, "0");
  return `#${part(r)}${part(g)}${part(b)}`;
}

export type ChipData = {
  hex: string;
  confidence: string;
  elementId: string;
};

export function chipData(colors: SourceColor[]): ChipData[] {
  return colors.map((c) => ({
    hex: rgbToHex(c.rgb),
    confidence: c.confidence.toFixed(2),
    elementId: c.element_id,
  }));
}
