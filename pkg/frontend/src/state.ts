// Client session state: the current document, preferences, the latest
// recommendations, and bookmarks, mirroring the server session. At most
// one recommendation request is live; stale responses are discarded by a
// monotonically increasing token.

import { ApiClient } from "./api.js";
import { PreferenceState } from "./prefs.js";
import type { AnalyzeResponse, BookmarkJson, PaletteJson } from "./types.js";

export class UiSession {
  readonly prefs = new PreferenceState();
  sessionId: string | null = null;
  docId: string | null = null;
  analysis: AnalyzeResponse | null = null;
  lastRecommendations: PaletteJson[] = [];
  selectedPalette: number | null = null;
  bookmarks: BookmarkJson[] = [];

  private requestToken = 0;

  constructor(private api: ApiClient) {}

  /** Create a server session, or re-attach to an existing one (reload). */
  async init(restoreSessionId?: string | null): Promise<void> {
    if (restoreSessionId) {
      try {
        const session = await this.api.getSession(restoreSessionId);
        this.sessionId = session.id;
        this.bookmarks = session.bookmarks;
        return;
      } catch {
        // stale id: fall through to a fresh session
      }
    }
    const session = await this.api.createSession();
    this.sessionId = session.id;
    this.bookmarks = session.bookmarks ?? [];
  }

  async analyze(image: Blob, annotations?: Blob): Promise<AnalyzeResponse> {
    const result = await this.api.analyze(image, annotations);
    this.analysis = result;
    this.docId = result.doc_id;
    this.prefs.clearAll();
    this.lastRecommendations = [];
    this.selectedPalette = null;
    return result;
  }

  /**
   * Ask for n palettes under the current preferences. Returns null when a
   * newer request finished first (this response is stale and discarded).
   */
  async requestRecommendations(n: number, seed?: number): Promise<PaletteJson[] | null> {
    if (!this.docId) {
      throw new Error("analyze an infographic first");
    }
    const token = ++this.requestToken;
    const response = await this.api.recommend({
      docId: this.docId,
      preferences: this.prefs,
      n,
      sessionId: this.sessionId ?? undefined,
      seed,
    });
    if (token !== this.requestToken) {
      return null;
    }
    this.lastRecommendations = response.palettes;
    this.selectedPalette = null;
    return response.palettes;
  }

  /** Picking a palette copies it into the preference widget (the iterate
   * loop) and makes it the preview coloring. */
  pickPalette(index: number): PaletteJson {
    const palette = this.lastRecommendations[index];
    if (!palette) {
      throw new Error(`no recommendation ${index}`);
    }
    this.selectedPalette = index;
    this.prefs.adoptPalette(palette.colors);
    return palette;
  }

  async bookmarkSelected(): Promise<BookmarkJson> {
    if (this.selectedPalette === null || !this.sessionId) {
      throw new Error("pick a palette first");
    }
    const bookmark = await this.api.addBookmark(
      this.sessionId,
      this.lastRecommendations[this.selectedPalette]
    );
    this.bookmarks = [...this.bookmarks, bookmark];
    return bookmark;
  }

  async refreshBookmarks(): Promise<BookmarkJson[]> {
    if (!this.sessionId) {
      return [];
    }
    this.bookmarks = await this.api.listBookmarks(this.sessionId);
    return this.bookmarks;
  }
}
