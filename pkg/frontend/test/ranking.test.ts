/**
 * Ranking behavior against a faithful stand-in for the service: additive
 * composite over normalized weights, missing scored as zero, ties broken by
 * ascending id. These are the properties the sliders rely on.
 */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import type { RankRequestBody, RankResponse } from "../src/types.js";
import { topNView } from "../src/views.js";

const SCORES: Record<string, Record<string, number | null>> = {
  NBS1: { uc_water: 1.0, uc_air: 0.25, es_habitats: null },
  NBS2: { uc_water: 0.75, uc_air: 0.75, es_habitats: 0.5 },
  NBS3: { uc_water: 0.75, uc_air: 0.5, es_habitats: 1.0 },
  NBS10: { uc_water: 0.0, uc_air: 1.0, es_habitats: 1.0 },
};

function fakeRank(body: RankRequestBody): RankResponse {
  let weights: Record<string, number>;
  if (body.weights) {
    const total = Object.values(body.weights).reduce((a, b) => a + b, 0);
    weights = Object.fromEntries(
      Object.entries(body.weights)
        .filter(([, w]) => w > 0)
        .map(([f, w]) => [f, w / total]),
    );
  } else if (body.facet) {
    weights = { [body.facet]: 1 };
  } else {
    throw new Error("unsupported fake request");
  }
  const entries = Object.keys(SCORES)
    .map((nbs) => {
      let value = 0;
      const unassessed: string[] = [];
      for (const [facet, weight] of Object.entries(weights)) {
        const cell = SCORES[nbs][facet] ?? null;
        if (cell === null) unassessed.push(facet);
        value += weight * (cell ?? 0);
      }
      return { nbs, value, unassessed };
    })
    .sort((a, b) => b.value - a.value || Number(a.nbs.slice(3)) - Number(b.nbs.slice(3)))
    .slice(0, body.top_n ?? 10);
  return { version: 1, entries, request: body };
}

function fakeFetch(): { client: ApiClient; bodies: RankRequestBody[] } {
  const bodies: RankRequestBody[] = [];
  const client = new ApiClient("http://service", async (input, init) => {
    if (!input.endsWith("/rank")) throw new Error(`unexpected ${input}`);
    const body = JSON.parse(String(init?.body)) as RankRequestBody;
    bodies.push(body);
    return new Response(JSON.stringify(fakeRank(body)), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  });
  return { client, bodies };
}

describe("slider-driven ranking", () => {
  it("sends raw slider weights; the service owns normalization", async () => {
    const { client, bodies } = fakeFetch();
    await client.rank({ weights: { uc_water: 2.5, uc_air: 0.5 }, top_n: 4 });
    expect(bodies[0].weights).toEqual({ uc_water: 2.5, uc_air: 0.5 });
  });

  it("scaling every slider by a constant leaves the displayed order unchanged", async () => {
    const { client } = fakeFetch();
    const weights = { uc_water: 1.5, uc_air: 0.5, es_habitats: 2.0 };
    const doubled = Object.fromEntries(Object.entries(weights).map(([f, w]) => [f, 2 * w]));
    const base = topNView(await client.rank({ weights, top_n: 4 }), "x");
    const scaled = topNView(await client.rank({ weights: doubled, top_n: 4 }), "x");
    expect(scaled.rows.map((r) => r.nbs)).toEqual(base.rows.map((r) => r.nbs));
    // composites are normalized server-side, so the values agree too
    scaled.rows.forEach((row, i) => expect(row.value).toBeCloseTo(base.rows[i].value, 12));
  });

  it("all weight on one facet ranks identically to the single-facet view", async () => {
    const { client } = fakeFetch();
    const viaWeights = topNView(await client.rank({ weights: { uc_air: 3 }, top_n: 4 }), "x");
    const viaFacet = topNView(await client.rank({ facet: "uc_air", top_n: 4 }), "x");
    expect(viaWeights.rows.map((r) => r.nbs)).toEqual(viaFacet.rows.map((r) => r.nbs));
  });

  it("unassessed facets are flagged, not hidden", async () => {
    const { client } = fakeFetch();
    const view = topNView(await client.rank({ weights: { es_habitats: 1 }, top_n: 4 }), "x");
    const flagged = view.rows.find((r) => r.nbs === "NBS1");
    expect(flagged?.unassessed).toEqual(["es_habitats"]);
  });

  it("surfaces API validation failures as errors", async () => {
    const client = new ApiClient("http://service", async () =>
      new Response(JSON.stringify({ code: "invalid_request" }), { status: 422 }),
    );
    await expect(client.rank({ weights: { uc_water: -1 } })).rejects.toThrow("422");
  });
});
