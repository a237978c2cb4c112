// Preference state and its canonical wire form.
//
// The serialized payload must match the server's schema byte for byte:
// keys sorted at every level, compact separators, binding groups sorted
// internally and by content. A contract test pins this against the shared
// fixture.

export interface PreferencePayload {
  bindings: string[][];
  exact: Record<string, string>;
  vague: Record<string, string>;
}

export class PreferenceState {
  private exact = new Map<string, string>();
  private vague = new Map<string, string>();
  private bindings: Set<string>[] = [];

  setExact(nodeId: string, hex: string): void {
    if (!/^#[0-9A-Fa-f]{6}$/.test(hex)) {
      throw new Error(`not a #RRGGBB color: ${hex}`);
    }
    this.exact.set(nodeId, hex.toUpperCase());
    this.vague.delete(nodeId);
  }

  setWord(nodeId: string, word: string): void {
    this.vague.set(nodeId, word.trim().toLowerCase());
    this.exact.delete(nodeId);
  }

  clear(nodeId: string): void {
    this.exact.delete(nodeId);
    this.vague.delete(nodeId);
  }

  clearAll(): void {
    this.exact.clear();
    this.vague.clear();
    this.bindings = [];
  }

  exactColor(nodeId: string): string | undefined {
    return this.exact.get(nodeId);
  }

  word(nodeId: string): string | undefined {
    return this.vague.get(nodeId);
  }

  isConstrained(nodeId: string): boolean {
    return this.exact.has(nodeId) || this.vague.has(nodeId);
  }

  bindSelection(nodeIds: string[]): void {
    const fresh = new Set(nodeIds);
    if (fresh.size < 2) {
      throw new Error("a binding needs at least two nodes");
    }
    // a node may sit in one binding only: merge overlapping groups
    const merged: Set<string>[] = [];
    for (const group of this.bindings) {
      if ([...group].some((id) => fresh.has(id))) {
        for (const id of group) fresh.add(id);
      } else {
        merged.push(group);
      }
    }
    merged.push(fresh);
    this.bindings = merged;
  }

  unbind(nodeId: string): void {
    this.bindings = this.bindings
      .map((g) => {
        const copy = new Set(g);
        copy.delete(nodeId);
        return copy;
      })
      .filter((g) => g.size >= 2);
  }

  isBound(nodeId: string): boolean {
    return this.bindings.some((g) => g.has(nodeId));
  }

  bindingGroups(): string[][] {
    return this.bindings.map((g) => [...g].sort());
  }

  adoptPalette(colors: Record<string, string>): void {
    for (const [nodeId, hex] of Object.entries(colors)) {
      this.setExact(nodeId, hex);
    }
  }

  toPayload(): PreferencePayload {
    const sortRecord = (m: Map<string, string>): Record<string, string> => {
      const out: Record<string, string> = {};
      for (const key of [...m.keys()].sort()) {
        out[key] = m.get(key)!;
      }
      return out;
    };
    const bindings = this.bindingGroups().sort((a, b) =>
      JSON.stringify(a) < JSON.stringify(b) ? -1 : 1
    );
    return { bindings, exact: sortRecord(this.exact), vague: sortRecord(this.vague) };
  }
}

/** JSON.stringify with object keys sorted at every depth and no spacing. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return `[${value.map(canonicalJson).join(",")}]`;
  }
  const entries = Object.entries(value as Record<string, unknown>).sort(([a], [b]) =>
    a < b ? -1 : a > b ? 1 : 0
  );
  const body = entries.map(([k, v]) => `${JSON.stringify(k)}:${canonicalJson(v)}`).join(",");
  return `{${body}}`;
}

export function serializePreferences(prefs: PreferenceState): string {
  return canonicalJson(prefs.toPayload());
}
