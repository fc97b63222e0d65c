// DOM rendering. Tint constants for mask overlays are display-only.

import type { ApiClient, RecolorResponse, RegionInfo, ResultEntry } from "./api.js";
import { chipData } from "./chips.js";

const MASK_TINT = "rgba(64, 160, 255, 0.55)";

export function renderChips(colors: RecolorResponse["source_colors"]): HTMLElement {
  const row = document.createElement("div");
  row.className = "chip-row";
  for (const chip of chipData(colors)) {
    const el = document.createElement("span");
    el.className = "chip";
    el.title = chip.elementId;
    const swatch = document.createElement("span");
    swatch.className = "chip-swatch";
    swatch.style.background = chip.hex;
    const label = document.createElement("span");
    label.textContent = `${chip.hex} (${chip.confidence})`;
    el.append(swatch, label);
    row.append(el);
  }
  return row;
}

function maskOverlay(api: ApiClient, photoRef: string, maskRef: string): HTMLCanvasElement {
  const canvas = document.createElement("canvas");
  const photo = new Image();
  const mask = new Image();
  photo.crossOrigin = mask.crossOrigin = "anonymous";
  let loaded = 0;
  const draw = () => {
    loaded += 1;
    if (loaded < 2) return;
    canvas.width = photo.naturalWidth;
    canvas.height = photo.naturalHeight;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.drawImage(photo, 0, 0);
    const tint = document.createElement("canvas");
    tint.width = canvas.width;
    tint.height = canvas.height;
    const tctx = tint.getContext("2d");
    if (!tctx) return;
    tctx.fillStyle = MASK_TINT;
    tctx.fillRect(0, 0, tint.width, tint.height);
    tctx.globalCompositeOperation = "destination-in";
    tctx.drawImage(mask, 0, 0);
    ctx.drawImage(tint, 0, 0);
  };
  photo.onload = mask.onload = draw;
  photo.src = api.assetUrl(photoRef);
  mask.src = api.assetUrl(maskRef);
  return canvas;
}

export function renderRegion(
  api: ApiClient,
  photoRef: string,
  region: RegionInfo,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "region";
  const caption = document.createElement("div");
  caption.textContent = `region "${region.phrase}" (${region.provider})`;
  const holder = document.createElement("div");
  let soft = false;
  const rebuild = () => {
    holder.replaceChildren(
      maskOverlay(api, photoRef, soft ? region.soft_mask_ref : region.initial_mask_ref),
    );
  };
  const toggle = document.createElement("button");
  toggle.type = "button";
  toggle.textContent = "initial / refined";
  toggle.addEventListener("click", () => {
    soft = !soft;
    rebuild();
  });
  rebuild();
  box.append(caption, toggle, holder);
  return box;
}

export function renderResultCard(
  api: ApiClient,
  entry: ResultEntry,
  onChoose: (ref: string) => void,
): HTMLElement {
  const card = document.createElement("div");
  card.className = "card";
  const img = document.createElement("img");
  img.src = api.assetUrl(entry.image_ref);
  img.alt = `result ${entry.result_ref}`;
  const meta = document.createElement("div");
  meta.className = "card-meta";
  const hex = chipData([
    {
      rgb: entry.source_color as [number, number, number],
      confidence: entry.confidence,
      element_id: "",
    },
  ])[0].hex;
  meta.textContent =
    `source ${hex}, region ${entry.region_index}, ` +
    `overlap ${entry.overlap_rates.map((o) => o.toFixed(2)).join("/")}`;
  const choose = document.createElement("button");
  choose.type = "button";
  choose.textContent = "use as base";
  choose.addEventListener("click", () => onChoose(entry.result_ref));
  const save = document.createElement("a");
  save.href = api.assetUrl(entry.design_ref);
  save.download = "recolored-design.png";
  save.textContent = "export design";
  card.append(img, meta, choose, save);
  return card;
}

export function renderError(err: unknown): HTMLElement {
  const box = document.createElement("div");
  box.className = "error";
  const e = err as { stage?: string; message?: string; suggestion?: string };
  box.textContent = e.stage ? `[${e.stage}] ${e.message}` : String(e.message ?? err);
  if (e.suggestion) {
    const hint = document.createElement("div");
    hint.textContent = `did you mean "${e.suggestion}"?`;
    box.append(hint);
  }
  return box;
}
