/** Pure view-model builders: every ordering comes verbatim from the service. */

import type {
  EvennessResponse,
  FacetPayload,
  PcaResponse,
  ProfileResponse,
  RankResponse,
  TaxonomyResponse,
} from "./types.js";

export interface BarDatum {
  key: string;
  label: string;
  /** null = unassessed; rendered distinctly from a zero-length bar */
  value: number | null;
}

export interface ProfileView {
  nbs: string;
  title: string;
  taxonomyPath: string[];
  ucBars: BarDatum[];
  esBars: BarDatum[];
  categoryBars: BarDatum[];
  evennessLabel: string;
}

export interface TopNView {
  heading: string;
  /** rows in exactly the order the service returned them */
  rows: { position: number; nbs: string; value: number; unassessed: string[] }[];
}

export interface ScatterView {
  points: { nbs: string; x: number; y: number; colorCode: string }[];
  xLabel: string;
  yLabel: string;
  colorCodes: string[];
}

export interface EvennessView {
  /** sorted by the chart's own axis (descending evenness), undefined last */
  bars: { nbs: string; evenness: number | null }[];
}

export function formatScore(value: number | null): string {
  return value === null ? "unassessed" : value.toFixed(2);
}

export function profileView(
  profile: ProfileResponse,
  facets: FacetPayload[],
): ProfileView {
  const labelOf = new Map(facets.map((f) => [f.id, f.label]));
  const bars = (scores: Record<string, number | null>): BarDatum[] =>
    Object.entries(scores).map(([key, value]) => ({
      key,
      label: labelOf.get(key) ?? key,
      value,
    }));
  const evenness = profile.evenness.evenness;
  return {
    nbs: profile.nbs,
    title: profile.final_name,
    taxonomyPath: profile.taxonomy_path,
    ucBars: bars(profile.uc_scores),
    esBars: bars(profile.es_scores),
    categoryBars: Object.entries(profile.es_category_means).map(([key, value]) => ({
      key,
      label: key,
      value,
    })),
    evennessLabel:
      evenness === null
        ? `evenness undefined (${profile.evenness.facet_count} facet with a positive score)`
        : `evenness ${evenness.toFixed(3)} over ${profile.evenness.facet_count} facets`,
  };
}

/**
 * The ranking table. Rows mirror the RankedList exactly: same ids, same
 * order, same values; the client never re-sorts.
 */
export function topNView(ranking: RankResponse, heading: string): TopNView {
  return {
    heading,
    rows: ranking.entries.map((entry, index) => ({
      position: index + 1,
      nbs: entry.nbs,
      value: entry.value,
      unassessed: [...entry.unassessed],
    })),
  };
}

export function scatterView(pca: PcaResponse): ScatterView {
  const codes = [...new Set(pca.points.map((p) => p.color_code))].sort();
  const pct = (i: number) => (pca.variance_fraction[i] * 100).toFixed(1);
  return {
    points: pca.points.map((p) => ({ nbs: p.nbs, x: p.x, y: p.y, colorCode: p.color_code })),
    xLabel: `dim 1 (${pct(0)}%)`,
    yLabel: `dim 2 (${pct(1)}%)`,
    colorCodes: codes,
  };
}

export function evennessView(payload: EvennessResponse): EvennessView {
  const defined = payload.items.filter((e) => e.evenness !== null);
  const undefinedOnes = payload.items.filter((e) => e.evenness === null);
  defined.sort((a, b) => (b.evenness as number) - (a.evenness as number) || a.nbs.localeCompare(b.nbs));
  return {
    bars: [...defined, ...undefinedOnes].map((e) => ({ nbs: e.nbs, evenness: e.evenness })),
  };
}

export interface TaxonomyTreeRow {
  code: string;
  level: number;
  question: string;
  memberCount: number;
  leaf: boolean;
}

export function taxonomyTree(taxonomy: TaxonomyResponse): TaxonomyTreeRow[] {
  const byParent = new Map<string | null, typeof taxonomy.nodes>();
  for (const node of taxonomy.nodes) {
    const bucket = byParent.get(node.parent) ?? [];
    bucket.push(node);
    byParent.set(node.parent, bucket);
  }
  const rows: TaxonomyTreeRow[] = [];
  const walk = (parent: string | null) => {
    for (const node of byParent.get(parent) ?? []) {
      rows.push({
        code: node.code,
        level: node.level,
        question: node.question,
        memberCount: node.members.length,
        leaf: node.leaf,
      });
      walk(node.code);
    }
  };
  walk(null);
  return rows;
}
