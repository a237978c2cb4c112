// Thin client for the recommendation service. Every recommended color the
// UI ever shows comes through these calls; the client never invents one.

import type {
  AnalyzeResponse,
  ApiErrorBody,
  BookmarkJson,
  PaletteJson,
  RecommendResponse,
  SessionJson,
} from "./types.js";
import type { PreferenceState } from "./prefs.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public kind: string,
    message: string
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let kind = "http";
  let message = `${response.status}`;
  try {
    const body = (await response.json()) as ApiErrorBody;
    kind = body.error.kind;
    message = body.error.message;
  } catch {
    // non-JSON error body: keep defaults
  }
  throw new ApiError(response.status, kind, message);
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch
  ) {}

  private async request<T>(method: string, path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, { method, ...init });
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; model_loaded: boolean }> {
    return this.request("GET", "/api/health");
  }

  lexicon(): Promise<{ words: { word: string; category: string }[] }> {
    return this.request("GET", "/api/lexicon");
  }

  createSession(): Promise<SessionJson> {
    return this.request("POST", "/api/sessions");
  }

  getSession(sessionId: string): Promise<SessionJson> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  analyze(image: Blob, annotations?: Blob): Promise<AnalyzeResponse> {
    const form = new FormData();
    form.append("image", image, "infographic.png");
    if (annotations) {
      form.append("annotations", annotations, "annotations.json");
    }
    return this.request("POST", "/api/analyze", { body: form });
  }

  recommend(options: {
    docId?: string;
    doc?: unknown;
    preferences: PreferenceState;
    n: number;
    sessionId?: string;
    seed?: number;
  }): Promise<RecommendResponse> {
    const body: Record<string, unknown> = {
      preferences: options.preferences.toPayload(),
      n: options.n,
    };
    if (options.docId !== undefined) body.doc_id = options.docId;
    if (options.doc !== undefined) body.doc = options.doc;
    if (options.sessionId !== undefined) body.session_id = options.sessionId;
    if (options.seed !== undefined) body.seed = options.seed;
    return this.request("POST", "/api/recommend", {
      body: JSON.stringify(body),
      headers: { "content-type": "application/json" },
    });
  }

  addBookmark(sessionId: string, palette: PaletteJson): Promise<BookmarkJson> {
    return this.request("POST", `/api/sessions/${sessionId}/bookmarks`, {
      body: JSON.stringify({ palette: { colors: palette.colors } }),
      headers: { "content-type": "application/json" },
    });
  }

  listBookmarks(sessionId: string): Promise<BookmarkJson[]> {
    return this.request<{ bookmarks: BookmarkJson[] }>(
      "GET",
      `/api/sessions/${sessionId}/bookmarks`
    ).then((r) => r.bookmarks);
  }

  deleteBookmark(sessionId: string, bookmarkId: string): Promise<void> {
    return this.request("DELETE", `/api/sessions/${sessionId}/bookmarks/${bookmarkId}`);
  }
}
