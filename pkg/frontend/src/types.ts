// JSON shapes exchanged with the recommendation API.

export interface DocumentNode {
  id: string;
  kind: "background" | "artistic" | "data" | "visual_group";
  element_type: string | null;
  bbox: [number, number, number, number];
  pixel_area: number;
  color: string | null;
  children: string[];
}

export interface DocumentJson {
  schema: string;
  width: number;
  height: number;
  vif_type: string;
  visual_groups: string[];
  root: string;
  nodes: DocumentNode[];
}

export interface LayoutItem {
  id: string;
  kind: DocumentNode["kind"];
  element_type: string | null;
  depth: number;
  bbox: [number, number, number, number];
  colorable: boolean;
  color: string | null;
}

export interface AnalyzeResponse {
  doc_id: string;
  document: DocumentJson;
  layout: LayoutItem[];
}

export interface PaletteJson {
  colors: Record<string, string>;
  source: string;
  request_hash: string;
  sample_index: number;
}

export interface RecommendResponse {
  palettes: PaletteJson[];
  seed: number;
}

export interface BookmarkJson {
  id: string;
  palette: { colors: Record<string, string> };
  created: number;
}

export interface SessionJson {
  id: string;
  history: unknown[];
  bookmarks: BookmarkJson[];
}

export interface ApiErrorBody {
  error: { status: number; kind: string; message: string };
}
