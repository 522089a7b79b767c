import type {
  ApiErrorBody,
  FontEntry,
  MapPayload,
  RetrieveMode,
  RetrieveResult,
} from "./types.js";

export class ApiError extends Error {
  readonly body: ApiErrorBody;

  constructor(body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.body = body;
  }
}

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

async function toApiError(resp: Response): Promise<ApiError> {
  try {
    const body = (await resp.json()) as ApiErrorBody;
    if (typeof body.code === "string" && typeof body.message === "string") {
      return new ApiError(body);
    }
  } catch {
    /* non-JSON error body; fall through to the generic shape */
  }
  return new ApiError({
    status: resp.status,
    code: "error",
    message: `request failed with HTTP ${resp.status}`,
  });
}

async function getJson<T>(fetchFn: FetchFn, url: string): Promise<T> {
  const resp = await fetchFn(url);
  if (!resp.ok) throw await toApiError(resp);
  return (await resp.json()) as T;
}

/** Thin typed client over the service endpoints. `fetchFn` is injectable so
 * tests can run against a recorded transport. */
export class ApiClient {
  constructor(
    private readonly fetchFn: FetchFn = (input, init) => globalThis.fetch(input, init),
    private readonly base = "",
  ) {}

  health(): Promise<{ status: string; index_version: number }> {
    return getJson(this.fetchFn, `${this.base}/api/health`);
  }

  async fonts(): Promise<FontEntry[]> {
    const body = await getJson<{ fonts: FontEntry[] }>(this.fetchFn, `${this.base}/api/fonts`);
    return body.fonts;
  }

  async charset(): Promise<string[]> {
    const body = await getJson<{ id: string; chars: string[] }>(
      this.fetchFn,
      `${this.base}/api/charset`,
    );
    return body.chars;
  }

  map(): Promise<MapPayload> {
    return getJson(this.fetchFn, `${this.base}/api/map`);
  }

  glyphUrl(fontId: string, char: string): string {
    const cp = char.codePointAt(0) ?? 0;
    return `${this.base}/api/glyph/${encodeURIComponent(fontId)}/${cp.toString(16)}.png`;
  }

  async retrieveByRef(
    fontId: string,
    char: string,
    k: number,
    mode: RetrieveMode,
    signal?: AbortSignal,
  ): Promise<RetrieveResult[]> {
    const resp = await this.fetchFn(`${this.base}/api/retrieve?k=${k}&mode=${mode}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ font_id: fontId, char }),
      signal,
    });
    if (!resp.ok) throw await toApiError(resp);
    const body = (await resp.json()) as { results: RetrieveResult[] };
    return body.results;
  }

  async retrieveByUpload(
    file: Blob,
    k: number,
    mode: RetrieveMode,
    signal?: AbortSignal,
  ): Promise<RetrieveResult[]> {
    const form = new FormData();
    form.append("image", file);
    const resp = await this.fetchFn(`${this.base}/api/retrieve?k=${k}&mode=${mode}`, {
      method: "POST",
      body: form,
      signal,
    });
    if (!resp.ok) throw await toApiError(resp);
    const body = (await resp.json()) as { results: RetrieveResult[] };
    return body.results;
  }
}
