/** DOM wiring: state <-> URL, API calls, rendering. All numbers come from the service. */

import { ApiClient } from "./api.js";
import {
  ExplorerState,
  RequestGate,
  activeWeights,
  initialState,
  stateFromQuery,
  stateToQuery,
} from "./state.js";
import { barChart, colorFor, evennessChart, scatterPlot, topNTable } from "./charts.js";
import {
  evennessView,
  profileView,
  scatterView,
  taxonomyTree,
  topNView,
} from "./views.js";
import type { FacetPayload, RankRequestBody } from "./types.js";

const apiBase =
  new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8000";
const api = new ApiClient(apiBase);
const rankGate = new RequestGate();

let state: ExplorerState = window.location.hash.length > 1
  ? stateFromQuery(window.location.hash.slice(1))
  : initialState();
let facets: FacetPayload[] = [];
let knownVersion: number | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function pushState(): void {
  window.location.hash = stateToQuery(state);
}

function banner(message: string | null): void {
  const box = el("banner");
  if (message === null) {
    box.style.display = "none";
    return;
  }
  box.style.display = "block";
  box.textContent = message;
}

function noteVersion(version: number): void {
  if (knownVersion !== null && version !== knownVersion) {
    banner("The dataset changed on the server; refresh to load the new snapshot.");
  }
  knownVersion = version;
  state.snapshotVersion = version;
}

async function renderCatalogue(): Promise<void> {
  const [listing, taxonomy] = await Promise.all([api.listNbs(), api.taxonomy()]);
  noteVersion(listing.version);
  const select = el("nbs-select") as HTMLSelectElement;
  select.innerHTML = listing.items
    .map((item) => `<option value="${item.id}">${item.id} - ${item.final_name}</option>`)
    .join("");
  if (state.selectedNbs) select.value = state.selectedNbs;
  const rows = taxonomyTree(taxonomy)
    .map(
      (row) =>
        `<div class="tax-row" style="padding-left:${row.level * 16}px">` +
        `<button data-code="${row.code}" class="tax-filter">${row.code}</button>` +
        ` <span class="count">${row.memberCount}</span>` +
        `<div class="question">${row.question}</div></div>`,
    )
    .join("");
  el("taxonomy").innerHTML = rows;
  for (const button of document.querySelectorAll<HTMLButtonElement>(".tax-filter")) {
    button.addEventListener("click", () => {
      state.taxonomyFilter = state.taxonomyFilter === button.dataset.code ? null : button.dataset.code!;
      pushState();
      void renderRanking();
    });
  }
}

async function renderProfile(): Promise<void> {
  if (!state.selectedNbs) return;
  try {
    const payload = await api.profile(state.selectedNbs);
    noteVersion(payload.version);
    const view = profileView(payload, facets);
    el("profile-title").textContent = `${view.nbs}: ${view.title}`;
    el("profile-path").textContent = view.taxonomyPath.join(" > ") + " - " + view.evennessLabel;
    el("profile-uc").innerHTML = barChart(view.ucBars);
    el("profile-es").innerHTML = barChart(view.esBars);
    el("profile-categories").innerHTML = barChart(view.categoryBars);
    banner(null);
  } catch (error) {
    banner(`Profile request failed (${String(error)}). Retry by re-selecting the NBS.`);
  }
}

function currentRankBody(): RankRequestBody | null {
  const weights = activeWeights(state);
  if (weights) {
    return { weights, filter: state.taxonomyFilter, top_n: state.topN };
  }
  if (state.activeCategory) {
    return { es_category: state.activeCategory, filter: state.taxonomyFilter, top_n: state.topN };
  }
  if (state.activeFacet) {
    return { facet: state.activeFacet, filter: state.taxonomyFilter, top_n: state.topN };
  }
  return null;
}

async function renderRanking(): Promise<void> {
  const body = currentRankBody();
  if (!body) {
    el("ranking").innerHTML = "<p>Select a challenge, a service category, or move a slider.</p>";
    return;
  }
  const token = rankGate.issue();
  try {
    const payload = await api.rank(body);
    if (!rankGate.shouldApply(token)) return; // a newer request superseded this one
    noteVersion(payload.version);
    const heading = body.weights
      ? "What-if composite ranking"
      : `Top ${state.topN} for ${body.facet ?? body.es_category}`;
    el("ranking").innerHTML = topNTable(topNView(payload, heading));
    banner(null);
  } catch (error) {
    banner(`Ranking request failed (${String(error)}). Adjust the request and retry.`);
  }
}

async function renderCharts(): Promise<void> {
  const [pca, evenness, taxonomy] = await Promise.all([api.pca(), api.evenness(), api.taxonomy()]);
  noteVersion(pca.version);
  el("pca").innerHTML = scatterPlot(scatterView(pca));
  const leafColor = new Map<string, string>();
  for (const node of taxonomy.nodes) {
    for (const member of node.members) {
      if (node.level === 2) leafColor.set(member, colorFor(node.code));
    }
  }
  el("evenness").innerHTML = evennessChart(
    evennessView(evenness),
    (nbs) => leafColor.get(nbs) ?? "#616161",
  );
}

function renderWeightPanel(): void {
  const panel = el("weights");
  panel.innerHTML = facets
    .map((facet) => {
      const value = state.weights[facet.id] ?? 0;
      return (
        `<label class="weight-row"><span>${facet.label}</span>` +
        `<input type="range" min="0" max="5" step="0.5" value="${value}" data-facet="${facet.id}">` +
        `<span class="value">${value}</span></label>`
      );
    })
    .join("");
  for (const slider of panel.querySelectorAll<HTMLInputElement>("input[type=range]")) {
    slider.addEventListener("input", () => {
      const facetId = slider.dataset.facet!;
      const value = Number(slider.value);
      if (value > 0) state.weights[facetId] = value;
      else delete state.weights[facetId];
      (slider.nextElementSibling as HTMLElement).textContent = slider.value;
      state.activeFacet = null;
      state.activeCategory = null;
      pushState();
      void renderRanking();
    });
  }
}

function renderFacetButtons(): void {
  const box = el("facet-buttons");
  const buttons = facets
    .filter((f) => f.kind === "UrbanChallenge")
    .map((f) => `<button class="facet" data-facet="${f.id}">${f.label}</button>`)
    .join("");
  const categories = ["Provisioning", "Regulating", "Cultural", "Supporting"]
    .map((c) => `<button class="category" data-category="${c}">${c} ES</button>`)
    .join("");
  box.innerHTML = buttons + categories;
  box.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.facet) {
      state.activeFacet = target.dataset.facet;
      state.activeCategory = null;
      state.weights = {};
    } else if (target.dataset.category) {
      state.activeCategory = target.dataset.category;
      state.activeFacet = null;
      state.weights = {};
    } else {
      return;
    }
    pushState();
    renderWeightPanel();
    void renderRanking();
  });
}

async function boot(): Promise<void> {
  try {
    facets = (await api.facets()).items;
  } catch (error) {
    banner(`Service unreachable at ${apiBase} (${String(error)}). Start it and reload.`);
    return;
  }
  renderFacetButtons();
  renderWeightPanel();
  await renderCatalogue();
  (el("nbs-select") as HTMLSelectElement).addEventListener("change", (event) => {
    state.selectedNbs = (event.target as HTMLSelectElement).value;
    pushState();
    void renderProfile();
  });
  await Promise.all([renderProfile(), renderRanking(), renderCharts()]);
}

window.addEventListener("hashchange", () => {
  state = stateFromQuery(window.location.hash.slice(1));
  renderWeightPanel();
  void Promise.all([renderProfile(), renderRanking()]);
});

void boot();
