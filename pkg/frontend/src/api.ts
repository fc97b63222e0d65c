// Thin client over the recoloring service. The UI never does color math:
// every number it shows comes straight out of these payloads.

export type SourceColor = {
  rgb: [number, number, number];
  confidence: number;
  element_id: string;
};

export type RegionInfo = {
  region_index: number;
  phrase: string;
  provider: string;
  initial_mask_ref: string;
  soft_mask_ref: string;
};

export type ResultEntry = {
  result_ref: string;
  image_ref: string;
  design_ref: string;
  source_color: number[];
  confidence: number;
  region_index: number;
  overlap_rates: number[];
  delta_L: number[];
  clamped: boolean;
};

export type RecolorResponse = {
  granularity: string;
  threshold: number;
  source_colors: SourceColor[];
  regions: RegionInfo[];
  results: ResultEntry[];
};

export type DesignMeta = {
  design_id: string;
  photo_rect: number[];
  design_ref: string;
  photo_ref: string;
  elements: { id: string; class: string; color: number[] | null; pixels: number }[];
  photo_objects: string[];
};

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly stage?: string,
    readonly code?: string,
    readonly suggestion?: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raise(resp: Response): Promise<never> {
  let body: Record<string, unknown> = {};
  try {
    body = (await resp.json()) as Record<string, unknown>;
  } catch {
    // non-JSON error body
  }
  throw new ApiError(
    resp.status,
    String(body.message ?? body.error ?? resp.statusText),
    body.stage as string | undefined,
    body.code as string | undefined,
    body.suggestion as string | undefined,
  );
}

export class ApiClient {
  constructor(
    readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async uploadDesign(files: { design: Blob; photo: Blob; annotations: Blob }): Promise<string> {
    const form = new FormData();
    form.append("design", files.design, "design.png");
    form.append("photo", files.photo, "photo.png");
    form.append("annotations", files.annotations, "annotations.json");
    const resp = await this.fetchFn(this.url("/api/designs"), { method: "POST", body: form });
    if (!resp.ok) await raise(resp);
    const body = (await resp.json()) as { design_id: string };
    return body.design_id;
  }

  async designMeta(designId: string): Promise<DesignMeta> {
    const resp = await this.fetchFn(this.url(`/api/designs/${designId}`));
    if (!resp.ok) await raise(resp);
    return (await resp.json()) as DesignMeta;
  }

  async recolor(
    designId: string,
    instruction: string,
    opts: { threshold?: number; mask?: string } = {},
  ): Promise<RecolorResponse> {
    const resp = await this.fetchFn(this.url("/api/recolor"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ design_id: designId, instruction, ...opts }),
    });
    if (!resp.ok) await raise(resp);
    return (await resp.json()) as RecolorResponse;
  }

  async iterate(
    designId: string,
    resultRef: string,
    instruction: string,
    opts: { threshold?: number } = {},
  ): Promise<RecolorResponse> {
    const resp = await this.fetchFn(this.url("/api/iterate"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        design_id: designId,
        result_ref: resultRef,
        instruction,
        ...opts,
      }),
    });
    if (!resp.ok) await raise(resp);
    return (await resp.json()) as RecolorResponse;
  }

  assetUrl(ref: string): string {
    return this.url(`/api/assets/${ref}`);
  }

  async fetchAsset(ref: string): Promise<Uint8Array> {
    const resp = await this.fetchFn(this.assetUrl(ref));
    if (!resp.ok) await raise(resp);
    return new Uint8Array(await resp.arrayBuffer());
  }
}
