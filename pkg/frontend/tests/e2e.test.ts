// @vitest-environment node
//
// End-to-end smoke against a live API (started by scripts/run_e2e.sh).
// Runs in the node environment so the real fetch/FormData drive the HTTP
// side, with an explicit JSDOM document for the widgets. Skipped unless
// PALETTIZER_API_URL is set.

import { readFileSync } from "node:fs";
import { JSDOM } from "jsdom";
import { describe, expect, it } from "vitest";

import { App } from "../src/app.js";

const apiUrl = process.env.PALETTIZER_API_URL;
const cardPng = process.env.PALETTIZER_CARD_PNG;
const cardAnn = process.env.PALETTIZER_CARD_ANN;

const maybe = apiUrl && cardPng && cardAnn ? describe : describe.skip;

class MemoryStorage {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
}

maybe("live workflow", () => {
  it("analyze, constrain, recommend, preview, bookmark, reload", async () => {
    const dom = new JSDOM("<!doctype html><body></body>");
    const document = dom.window.document;
    const storage = new MemoryStorage();
    const fetchImpl = fetch.bind(globalThis);
    const root = document.createElement("div");
    document.body.appendChild(root);

    const app = new App(root, apiUrl!, fetchImpl, storage);
    await app.start();

    // analyze the test card
    const png = new Blob([readFileSync(cardPng!)], { type: "image/png" });
    const ann = new Blob([readFileSync(cardAnn!)], { type: "application/json" });
    await app.analyze(png, ann);
    const analysis = app.session.analysis!;
    expect(analysis.document.schema).toBe("palettizer/1");

    const colorable = analysis.layout.filter((n) => n.colorable).map((n) => n.id);
    const rootId = analysis.document.root;
    const others = colorable.filter((id) => id !== rootId);
    expect(others.length).toBeGreaterThanOrEqual(2);

    // pin one color, set one vague word, bind two nodes
    const pinned = others[0];
    app.setExact(pinned, "#FFFFFF");
    app.setWord(rootId, "light");
    const bound = others.slice(0, 2);
    app.toggleSelect(bound[0]);
    app.toggleSelect(bound[1]);
    app.bindSelection();

    // the widget encodes all three constraint kinds
    const pinnedRect = app.nodeRect(pinned)!;
    expect(pinnedRect.querySelector('[data-role="swatch"]')!.getAttribute("fill")).toBe("#FFFFFF");
    expect(app.nodeRect(rootId)!.querySelector('[data-role="word-label"]')!.textContent).toBe("light");
    for (const id of bound) {
      expect(app.nodeRect(id)!.querySelector('[data-role="binding-dot"]')).not.toBeNull();
    }

    // request five palettes
    const palettes = await app.getRecommendations(5, 1234);
    expect(palettes).not.toBeNull();
    expect(palettes!).toHaveLength(5);
    for (const palette of palettes!) {
      expect(palette.colors[pinned]).toBe("#FFFFFF");
      expect(palette.colors[bound[0]]).toBe(palette.colors[bound[1]]);
    }

    // picking a palette recolors the preview and fills the widget
    app.pickPalette(0);
    const chosen = palettes![0];
    for (const id of colorable) {
      expect(app.previewFill(id)).toBe(chosen.colors[id]);
    }
    expect(app.session.prefs.exactColor(rootId)).toBe(chosen.colors[rootId]);

    // bookmark, then "reload": a fresh app restoring the same session
    await app.bookmarkSelected();
    const bookmarkId = app.session.bookmarks[0].id;

    const root2 = document.createElement("div");
    document.body.appendChild(root2);
    const app2 = new App(root2, apiUrl!, fetchImpl, storage);
    await app2.start();
    expect(app2.session.sessionId).toBe(app.session.sessionId);
    const survived = app2.session.bookmarks.map((b) => b.id);
    expect(survived).toContain(bookmarkId);
    expect(root2.querySelector(`[data-bookmark-id="${bookmarkId}"]`)).not.toBeNull();
  });
});
