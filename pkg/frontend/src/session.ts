// Session state: instruction history is append-only; the base result is the
// original photo until the user commits a prior result, after which new
// instructions iterate on it.

import type { ApiClient, RecolorResponse } from "./api.js";

export type HistoryEntry = {
  instruction: string;
  granularity: string;
  baseRef: string | null;
  resultRefs: string[];
};

export class Session {
  readonly history: HistoryEntry[] = [];
  private baseRef: string | null = null;
  private pendingRef: string | null = null;
  lastResponse: RecolorResponse | null = null;

  constructor(
    readonly api: ApiClient,
    readonly designId: string,
  ) {}

  get baseResultRef(): string | null {
    return this.baseRef;
  }

  get pendingChoice(): string | null {
    return this.pendingRef;
  }

  /** Mark a prior result as the candidate base without committing it. */
  previewChoice(resultRef: string): void {
    this.pendingRef = resultRef;
  }

  /** Drop the candidate; the base result stays whatever it was. */
  cancelChoice(): void {
    this.pendingRef = null;
  }

  /** Commit the candidate as the base for subsequent instructions. */
  confirmChoice(): void {
    if (this.pendingRef !== null) {
      this.baseRef = this.pendingRef;
      this.pendingRef = null;
    }
  }

  async submitInstruction(text: string): Promise<RecolorResponse> {
    const resp =
      this.baseRef === null
        ? await this.api.recolor(this.designId, text)
        : await this.api.iterate(this.designId, this.baseRef, text);
    this.history.push({
      instruction: text,
      granularity: resp.granularity,
      baseRef: this.baseRef,
      resultRefs: resp.results.map((r) => r.result_ref),
    });
    this.lastResponse = resp;
    return resp;
  }

  async chooseAndIterate(resultRef: string, text: string): Promise<RecolorResponse> {
    this.previewChoice(resultRef);
    this.confirmChoice();
    return this.submitInstruction(text);
  }

  /** Raw bytes of a produced raster, exactly as the service stores it. */
  async exportResult(ref: string): Promise<Uint8Array> {
    return this.api.fetchAsset(ref);
  }
}
