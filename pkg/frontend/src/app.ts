// Page assembly: preference widget, preview, recommendation strip, and
// bookmarks pane, wired to one UiSession.

import { ApiClient } from "./api.js";
import { computeLayerView, hitTest, renderLayerView } from "./layers.js";
import { Preview } from "./preview.js";
import { UiSession } from "./state.js";
import type { PaletteJson } from "./types.js";

const SESSION_KEY = "palettizer.session";

export class App {
  readonly session: UiSession;
  private layerHost: HTMLElement;
  private previewHost: HTMLElement;
  private paletteHost: HTMLElement;
  private bookmarkHost: HTMLElement;
  private preview: Preview | null = null;
  private selection: string[] = [];

  constructor(
    root: HTMLElement,
    apiBase: string,
    fetchImpl: typeof fetch = fetch,
    private storage: Pick<Storage, "getItem" | "setItem"> | null = null
  ) {
    this.session = new UiSession(new ApiClient(apiBase, fetchImpl));
    const doc = root.ownerDocument;
    const make = (cls: string, title: string): HTMLElement => {
      const section = doc.createElement("section");
      section.className = cls;
      const heading = doc.createElement("h2");
      heading.textContent = title;
      section.appendChild(heading);
      const body = doc.createElement("div");
      body.className = `${cls}-body`;
      section.appendChild(body);
      root.appendChild(section);
      return body;
    };
    this.layerHost = make("color-preferences", "Color Preferences");
    this.previewHost = make("canvas-preview", "Preview");
    this.paletteHost = make("recommendations", "Recommendations");
    this.bookmarkHost = make("bookmarks", "Bookmarks");
  }

  async start(): Promise<void> {
    const stored = this.storage?.getItem(SESSION_KEY) ?? null;
    await this.session.init(stored);
    this.storage?.setItem(SESSION_KEY, this.session.sessionId!);
    this.renderBookmarks();
  }

  async analyze(image: Blob, annotations?: Blob): Promise<void> {
    const result = await this.session.analyze(image, annotations);
    this.preview = new Preview(this.previewHost, result.document);
    this.renderLayers();
    this.renderPalettes();
  }

  setExact(nodeId: string, hex: string): void {
    this.session.prefs.setExact(nodeId, hex);
    this.renderLayers();
  }

  setWord(nodeId: string, word: string): void {
    this.session.prefs.setWord(nodeId, word);
    this.renderLayers();
  }

  clearPreference(nodeId: string): void {
    this.session.prefs.clear(nodeId);
    this.renderLayers();
  }

  toggleSelect(nodeId: string): void {
    const at = this.selection.indexOf(nodeId);
    if (at >= 0) {
      this.selection.splice(at, 1);
    } else {
      this.selection.push(nodeId);
    }
  }

  bindSelection(): void {
    this.session.prefs.bindSelection([...this.selection]);
    this.selection = [];
    this.renderLayers();
  }

  async getRecommendations(n = 5, seed?: number): Promise<PaletteJson[] | null> {
    const palettes = await this.session.requestRecommendations(n, seed);
    if (palettes !== null) {
      this.renderPalettes();
    }
    return palettes;
  }

  pickPalette(index: number): void {
    const palette = this.session.pickPalette(index);
    this.preview?.applyPalette(palette.colors);
    this.renderLayers();
    this.renderPalettes();
  }

  async bookmarkSelected(): Promise<void> {
    await this.session.bookmarkSelected();
    this.renderBookmarks();
  }

  previewFill(nodeId: string): string | null {
    return this.preview?.fillOf(nodeId) ?? null;
  }

  layerWidget(): SVGSVGElement | null {
    return this.layerHost.querySelector("svg");
  }

  nodeRect(nodeId: string): Element | null {
    const svg = this.layerWidget();
    return svg ? hitTest(svg, nodeId) : null;
  }

  private renderLayers(): void {
    if (!this.session.analysis) {
      return;
    }
    const view = computeLayerView(
      this.session.analysis.layout,
      this.session.analysis.document.width,
      this.session.prefs
    );
    renderLayerView(this.layerHost, view, (nodeId) => this.toggleSelect(nodeId));
  }

  private renderPalettes(): void {
    const doc = this.paletteHost.ownerDocument;
    this.paletteHost.replaceChildren();
    this.session.lastRecommendations.forEach((palette, index) => {
      const strip = doc.createElement("button");
      strip.className = "palette-strip";
      strip.dataset.index = String(index);
      if (this.session.selectedPalette === index) {
        strip.dataset.selected = "1";
      }
      for (const nodeId of Object.keys(palette.colors).sort()) {
        const chip = doc.createElement("span");
        chip.className = "chip";
        chip.dataset.nodeId = nodeId;
        chip.style.backgroundColor = palette.colors[nodeId];
        chip.textContent = " ";
        strip.appendChild(chip);
      }
      strip.addEventListener("click", () => this.pickPalette(index));
      this.paletteHost.appendChild(strip);
    });
  }

  private renderBookmarks(): void {
    const doc = this.bookmarkHost.ownerDocument;
    this.bookmarkHost.replaceChildren();
    for (const bookmark of this.session.bookmarks) {
      const item = doc.createElement("div");
      item.className = "bookmark";
      item.dataset.bookmarkId = bookmark.id;
      item.textContent = Object.values(bookmark.palette.colors).join(" ");
      this.bookmarkHost.appendChild(item);
    }
  }
}
