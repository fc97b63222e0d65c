// Headless scripted session: upload -> instruction -> choose first result ->
// iterate -> export. Drives the same ApiClient/Session code the browser UI
// uses, so raster parity with the CLI proves the whole client path.

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { ApiClient } from "./api.js";
import { chipData } from "./chips.js";
import { Session } from "./session.js";

function arg(name: string): string {
  const i = process.argv.indexOf(`--${name}`);
  if (i < 0 || i + 1 >= process.argv.length) {
    console.error(`missing --${name}`);
    process.exit(2);
  }
  return process.argv[i + 1];
}

async function main(): Promise<void> {
  const base = arg("base");
  const bundle = arg("bundle");
  const first = arg("instruction");
  const second = arg("second");
  const out = arg("out");
  const chipsOut = arg("chips");

  const api = new ApiClient(base);
  const blob = (name: string, type: string) =>
    new Blob([readFileSync(join(bundle, name))], { type });
  const designId = await api.uploadDesign({
    design: blob("design.png", "image/png"),
    photo: blob("photo.png", "image/png"),
    annotations: blob("annotations.json", "application/json"),
  });

  const session = new Session(api, designId);
  const r1 = await session.submitInstruction(first);
  const chips = chipData(r1.source_colors);

  session.previewChoice(r1.results[0].result_ref);
  session.confirmChoice();
  const r2 = await session.submitInstruction(second);

  const design = await session.exportResult(r2.results[0].design_ref);
  writeFileSync(out, design);
  writeFileSync(
    chipsOut,
    JSON.stringify(
      {
        api_source_colors: r1.source_colors,
        chip_hex: chips.map((c) => c.hex),
        history_length: session.history.length,
        granularities: [r1.granularity, r2.granularity],
        result_counts: [r1.results.length, r2.results.length],
      },
      null,
      1,
    ),
  );
  console.log(`wrote ${out} (${design.length} bytes), ${r1.results.length}+${r2.results.length} results`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
