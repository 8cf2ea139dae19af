/** Thin typed client over the decision-support service; no local recomputation. */

import type {
  EvennessResponse,
  FacetsResponse,
  NbsListResponse,
  PcaResponse,
  ProfileResponse,
  RankRequestBody,
  RankResponse,
  TaxonomyResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch.bind(globalThis),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  listNbs(): Promise<NbsListResponse> {
    return this.get("/nbs");
  }

  profile(nbsId: string): Promise<ProfileResponse> {
    return this.get(`/nbs/${encodeURIComponent(nbsId)}/profile`);
  }

  taxonomy(): Promise<TaxonomyResponse> {
    return this.get("/taxonomy");
  }

  facets(): Promise<FacetsResponse> {
    return this.get("/facets");
  }

  pca(): Promise<PcaResponse> {
    return this.get("/pca");
  }

  evenness(): Promise<EvennessResponse> {
    return this.get("/evenness");
  }

  /** Weights are sent exactly as set by the sliders; the service normalizes. */
  async rank(body: RankRequestBody): Promise<RankResponse> {
    const response = await this.fetchImpl(`${this.baseUrl}/rank`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as RankResponse;
  }
}
