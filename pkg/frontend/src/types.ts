/** Payload shapes of the decision-support HTTP API (field names match the service). */

export interface NbsSummary {
  id: string;
  final_name: string;
  taxonomy_leaf: string;
  name_provenance: string;
}

export interface NbsListResponse {
  version: number;
  items: NbsSummary[];
}

export interface EvennessPayload {
  nbs: string;
  diversity: number;
  facet_count: number;
  evenness: number | null;
}

export interface ProfileResponse {
  version: number;
  nbs: string;
  final_name: string;
  uc_scores: Record<string, number | null>;
  es_scores: Record<string, number | null>;
  es_category_means: Record<string, number | null>;
  evenness: EvennessPayload;
  taxonomy_path: string[];
}

export interface TaxonomyNodePayload {
  code: string;
  parent: string | null;
  level: number;
  question: string;
  leaf: boolean;
  members: string[];
}

export interface TaxonomyResponse {
  version: number;
  nodes: TaxonomyNodePayload[];
}

export interface FacetPayload {
  id: string;
  kind: "UrbanChallenge" | "EcosystemService";
  es_category: string | null;
  label: string;
}

export interface FacetsResponse {
  version: number;
  items: FacetPayload[];
}

export interface RankedEntryPayload {
  nbs: string;
  value: number;
  unassessed: string[];
}

export interface RankResponse {
  version: number;
  entries: RankedEntryPayload[];
  request: RankRequestBody;
}

export interface RankRequestBody {
  facet?: string | null;
  es_category?: string | null;
  weights?: Record<string, number> | null;
  filter?: string | null;
  top_n?: number;
}

export interface PcaPoint {
  nbs: string;
  x: number;
  y: number;
  color_code: string;
}

export interface PcaResponse {
  version: number;
  variable_ids: string[];
  eigenvalues: number[];
  variance_fraction: number[];
  points: PcaPoint[];
  converged: boolean;
}

export interface EvennessResponse {
  version: number;
  items: EvennessPayload[];
}
