// The layered preference widget: one horizontal band per tree depth, the
// background canvas at the bottom, children rendered in the bands above
// their parents. Each node is a rectangle whose horizontal extent mirrors
// its bounding box; its fill shows the current preference (hatched when
// unconstrained), a red dot marks bound nodes, and vague words sit on top.

import type { LayoutItem } from "./types.js";
import type { PreferenceState } from "./prefs.js";

export interface LayerRect {
  id: string;
  kind: LayoutItem["kind"];
  depth: number;
  xFrac: number;
  widthFrac: number;
  colorable: boolean;
  fill: string | null;
  hatched: boolean;
  bindingDot: boolean;
  wordLabel: string | null;
}

export interface LayerView {
  rows: LayerRect[][]; // rows[0] = deepest layer ... last row = root
  maxDepth: number;
  docWidth: number;
}

export function computeLayerView(
  layout: LayoutItem[],
  docWidth: number,
  prefs: PreferenceState
): LayerView {
  const maxDepth = layout.reduce((d, item) => Math.max(d, item.depth), 0);
  const rows: LayerRect[][] = Array.from({ length: maxDepth + 1 }, () => []);
  for (const item of layout) {
    const exact = prefs.exactColor(item.id);
    const word = prefs.word(item.id) ?? null;
    const rect: LayerRect = {
      id: item.id,
      kind: item.kind,
      depth: item.depth,
      xFrac: item.bbox[0] / docWidth,
      widthFrac: Math.max(item.bbox[2] / docWidth, 0.015),
      colorable: item.colorable,
      fill: exact ?? null,
      hatched: item.colorable && !exact,
      bindingDot: prefs.isBound(item.id),
      wordLabel: word,
    };
    // row 0 is the deepest layer so the DOM stacks bottom-up visually
    rows[maxDepth - item.depth].push(rect);
  }
  for (const row of rows) {
    row.sort((a, b) => a.xFrac - b.xFrac || (a.id < b.id ? -1 : 1));
  }
  return { rows, maxDepth, docWidth };
}

const SVG_NS = "http://www.w3.org/2000/svg";
export const ROW_HEIGHT = 34;
export const ROW_GAP = 8;
export const WIDGET_WIDTH = 420;

export function renderLayerView(
  container: Element,
  view: LayerView,
  onSelect?: (nodeId: string) => void
): SVGSVGElement {
  const doc = container.ownerDocument!;
  container.replaceChildren();
  const height = view.rows.length * (ROW_HEIGHT + ROW_GAP);
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "layer-widget");
  svg.setAttribute("viewBox", `0 0 ${WIDGET_WIDTH} ${height}`);
  svg.setAttribute("width", String(WIDGET_WIDTH));
  svg.setAttribute("height", String(height));

  view.rows.forEach((row, rowIndex) => {
    const y = rowIndex * (ROW_HEIGHT + ROW_GAP);
    for (const rect of row) {
      const group = doc.createElementNS(SVG_NS, "g");
      group.setAttribute("data-node-id", rect.id);
      group.setAttribute("data-depth", String(rect.depth));
      group.setAttribute("class", "layer-node");

      const box = doc.createElementNS(SVG_NS, "rect");
      box.setAttribute("x", String(rect.xFrac * WIDGET_WIDTH));
      box.setAttribute("y", String(y));
      box.setAttribute("width", String(rect.widthFrac * WIDGET_WIDTH));
      box.setAttribute("height", String(ROW_HEIGHT));
      box.setAttribute("stroke", "#444444");
      box.setAttribute("data-role", "swatch");
      if (rect.fill) {
        box.setAttribute("fill", rect.fill);
        box.setAttribute("data-constrained", "exact");
      } else {
        box.setAttribute("fill", "#FFFFFF");
        box.setAttribute("data-constrained", rect.wordLabel ? "vague" : "none");
      }
      group.appendChild(box);

      if (rect.hatched && !rect.wordLabel) {
        // the no-constraint convention: empty rectangle with a diagonal line
        const line = doc.createElementNS(SVG_NS, "line");
        line.setAttribute("x1", String(rect.xFrac * WIDGET_WIDTH));
        line.setAttribute("y1", String(y + ROW_HEIGHT));
        line.setAttribute("x2", String((rect.xFrac + rect.widthFrac) * WIDGET_WIDTH));
        line.setAttribute("y2", String(y));
        line.setAttribute("stroke", "#888888");
        line.setAttribute("data-role", "no-constraint");
        group.appendChild(line);
      }

      if (rect.wordLabel) {
        const label = doc.createElementNS(SVG_NS, "text");
        label.setAttribute("x", String((rect.xFrac + rect.widthFrac / 2) * WIDGET_WIDTH));
        label.setAttribute("y", String(y + ROW_HEIGHT / 2 + 4));
        label.setAttribute("text-anchor", "middle");
        label.setAttribute("data-role", "word-label");
        label.textContent = rect.wordLabel;
        group.appendChild(label);
      }

      if (rect.bindingDot) {
        const dot = doc.createElementNS(SVG_NS, "circle");
        dot.setAttribute("cx", String((rect.xFrac + rect.widthFrac / 2) * WIDGET_WIDTH));
        dot.setAttribute("cy", String(y + ROW_HEIGHT + ROW_GAP / 2));
        dot.setAttribute("r", "3");
        dot.setAttribute("fill", "#D32F2F");
        dot.setAttribute("data-role", "binding-dot");
        group.appendChild(dot);
      }

      if (onSelect) {
        group.addEventListener("click", () => onSelect(rect.id));
      }
      svg.appendChild(group);
    }
  });
  container.appendChild(svg);
  return svg;
}

/** Resolve a rendered node group by id; 1:1 with the document's nodes. */
export function hitTest(svg: SVGSVGElement, nodeId: string): Element | null {
  return svg.querySelector(`[data-node-id="${nodeId}"]`);
}
