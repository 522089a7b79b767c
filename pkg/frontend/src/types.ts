/** JSON shapes of the retrieval service. The API is the single source of
 * truth — the client never computes embeddings or distances itself. */

export interface FontEntry {
  id: string;
  preview_url: string;
}

export interface MapPoint {
  font_id: string;
  x: number;
  y: number;
}

export interface MapPayload {
  explained_variance: number[];
  points: MapPoint[];
}

export interface RetrieveResult {
  font_id: string;
  distance: number;
  best_char?: string;
  preview_url: string;
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
}

export type RetrieveMode = "per_glyph" | "aggregate";

/** What is being asked: an indexed glyph reference or an uploaded image.
 * Upload payloads are not serializable; the descriptor carries only the file
 * name so the action log stays replayable (responses are logged separately).
 */
export type QueryDescriptor =
  | { kind: "ref"; fontId: string; char: string }
  | { kind: "upload"; fileName: string };
