// Document preview: the infographic's nodes drawn to scale as SVG shapes,
// recolored whenever a palette is applied. Colors shown for colorable
// nodes always originate from the API (the original document or a
// recommended palette), never from the client.

import type { DocumentJson, DocumentNode } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function shapeFor(doc: Document, node: DocumentNode): SVGElement {
  const [x, y, w, h] = node.bbox;
  if (node.element_type === "circle") {
    const el = doc.createElementNS(SVG_NS, "ellipse");
    el.setAttribute("cx", String(x + w / 2));
    el.setAttribute("cy", String(y + h / 2));
    el.setAttribute("rx", String(w / 2));
    el.setAttribute("ry", String(h / 2));
    return el;
  }
  const el = doc.createElementNS(SVG_NS, "rect");
  el.setAttribute("x", String(x));
  el.setAttribute("y", String(y));
  el.setAttribute("width", String(w));
  el.setAttribute("height", String(h));
  return el;
}

export class Preview {
  private svg: SVGSVGElement;
  private fills = new Map<string, SVGElement>();
  private baseColors = new Map<string, string | null>();

  constructor(container: Element, docJson: DocumentJson) {
    const doc = container.ownerDocument!;
    container.replaceChildren();
    this.svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("class", "preview");
    this.svg.setAttribute("viewBox", `0 0 ${docJson.width} ${docJson.height}`);
    this.svg.setAttribute("width", "320");

    // document order is pre-order, so parents paint before children
    for (const node of docJson.nodes) {
      if (node.kind === "visual_group") {
        continue;
      }
      const el = shapeFor(doc, node);
      el.setAttribute("data-node-id", node.id);
      el.setAttribute("fill", node.color ?? "#E0E0E0");
      if (node.color === null) {
        el.setAttribute("data-wireframe", "1");
        el.setAttribute("stroke", "#9E9E9E");
      }
      this.fills.set(node.id, el);
      this.baseColors.set(node.id, node.color);
      this.svg.appendChild(el);
    }
    container.appendChild(this.svg);
  }

  element(): SVGSVGElement {
    return this.svg;
  }

  fillOf(nodeId: string): string | null {
    return this.fills.get(nodeId)?.getAttribute("fill") ?? null;
  }

  applyPalette(colors: Record<string, string>): void {
    for (const [nodeId, el] of this.fills) {
      const next = colors[nodeId];
      if (next) {
        el.setAttribute("fill", next);
        el.removeAttribute("data-wireframe");
      }
    }
  }

  reset(): void {
    for (const [nodeId, el] of this.fills) {
      el.setAttribute("fill", this.baseColors.get(nodeId) ?? "#E0E0E0");
    }
  }
}
