/** Explorer state, shareable through the URL, plus the request race guard. */

export interface ExplorerState {
  selectedNbs: string | null;
  /** active single target: facet id or ES category (mutually exclusive) */
  activeFacet: string | null;
  activeCategory: string | null;
  /** slider weights by facet id; only positive entries are sent */
  weights: Record<string, number>;
  taxonomyFilter: string | null;
  topN: number;
  snapshotVersion: number | null;
}

export function initialState(): ExplorerState {
  return {
    selectedNbs: null,
    activeFacet: null,
    activeCategory: null,
    weights: {},
    taxonomyFilter: null,
    topN: 10,
    snapshotVersion: null,
  };
}

/** Serialize to a query string; pure inverse of {@link stateFromQuery}. */
export function stateToQuery(state: ExplorerState): string {
  const params = new URLSearchParams();
  if (state.selectedNbs) params.set("nbs", state.selectedNbs);
  if (state.activeFacet) params.set("facet", state.activeFacet);
  if (state.activeCategory) params.set("category", state.activeCategory);
  if (state.taxonomyFilter) params.set("filter", state.taxonomyFilter);
  if (state.topN !== 10) params.set("top", String(state.topN));
  if (state.snapshotVersion !== null) params.set("v", String(state.snapshotVersion));
  const weightKeys = Object.keys(state.weights).sort();
  if (weightKeys.length > 0) {
    params.set("w", weightKeys.map((k) => `${k}:${state.weights[k]}`).join(","));
  }
  return params.toString();
}

export function stateFromQuery(query: string): ExplorerState {
  const params = new URLSearchParams(query);
  const state = initialState();
  state.selectedNbs = params.get("nbs");
  state.activeFacet = params.get("facet");
  state.activeCategory = params.get("category");
  state.taxonomyFilter = params.get("filter");
  const top = params.get("top");
  if (top !== null && Number.isFinite(Number(top)) && Number(top) >= 1) {
    state.topN = Number(top);
  }
  const version = params.get("v");
  if (version !== null && Number.isFinite(Number(version))) {
    state.snapshotVersion = Number(version);
  }
  const weights = params.get("w");
  if (weights) {
    for (const part of weights.split(",")) {
      const [key, raw] = part.split(":");
      const value = Number(raw);
      if (key && Number.isFinite(value) && value >= 0) {
        state.weights[key] = value;
      }
    }
  }
  return state;
}

/** Positive slider weights, exactly as they will be posted to /rank. */
export function activeWeights(state: ExplorerState): Record<string, number> | null {
  const entries = Object.entries(state.weights).filter(([, w]) => w > 0);
  if (entries.length === 0) return null;
  return Object.fromEntries(entries);
}

/**
 * Last-write-wins guard for overlapping in-flight requests: a response is
 * applied only when no newer request has been issued for the same view.
 */
export class RequestGate {
  private issued = 0;
  private applied = 0;

  issue(): number {
    return ++this.issued;
  }

  shouldApply(token: number): boolean {
    if (token < this.applied || token < this.issued) {
      return false;
    }
    this.applied = token;
    return true;
  }
}
