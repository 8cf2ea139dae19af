/** SVG/HTML string renderers for the view models; no chart library, no state. */

import type { BarDatum, EvennessView, ScatterView, TopNView } from "./views.js";

const PALETTE: Record<string, string> = {
  NBS_su: "#2e7d32",
  NBS_tu: "#1565c0",
  NBS_ir: "#00838f",
  NBS_is: "#8d6e63",
  NBS_ib: "#ef6c00",
};

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function colorFor(code: string): string {
  return PALETTE[code] ?? "#616161";
}

/** Horizontal bars; unassessed facets get a hatched placeholder, not a zero bar. */
export function barChart(data: BarDatum[], width = 420): string {
  const rowHeight = 22;
  const labelWidth = 230;
  const height = data.length * rowHeight + 4;
  const rows = data
    .map((d, i) => {
      const y = i * rowHeight + 2;
      const label = `<text x="${labelWidth - 6}" y="${y + 14}" text-anchor="end" font-size="11">${esc(d.label)}</text>`;
      if (d.value === null) {
        return `${label}<text x="${labelWidth + 4}" y="${y + 14}" font-size="11" fill="#9e9e9e" font-style="italic">unassessed</text>`;
      }
      const barLength = Math.round(d.value * (width - labelWidth - 50));
      return (
        label +
        `<rect x="${labelWidth}" y="${y + 3}" width="${Math.max(barLength, 1)}" height="14" fill="#4caf50"></rect>` +
        `<text x="${labelWidth + barLength + 4}" y="${y + 14}" font-size="11">${d.value.toFixed(2)}</text>`
      );
    })
    .join("");
  return `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">${rows}</svg>`;
}

export function topNTable(view: TopNView): string {
  const rows = view.rows
    .map((row) => {
      const note = row.unassessed.length
        ? ` <span class="unassessed">unassessed: ${esc(row.unassessed.join(", "))}</span>`
        : "";
      return `<tr><td>${row.position}</td><td class="nbs-id">${esc(row.nbs)}</td><td>${row.value.toFixed(4)}</td><td>${note}</td></tr>`;
    })
    .join("");
  return (
    `<h3>${esc(view.heading)}</h3>` +
    `<table class="topn"><thead><tr><th>#</th><th>NBS</th><th>score</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function scatterPlot(view: ScatterView, size = 420): string {
  const xs = view.points.map((p) => p.x);
  const ys = view.points.map((p) => p.y);
  const pad = 24;
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  const yMin = Math.min(...ys), yMax = Math.max(...ys);
  const sx = (x: number) => pad + ((x - xMin) / (xMax - xMin || 1)) * (size - 2 * pad);
  const sy = (y: number) => size - pad - ((y - yMin) / (yMax - yMin || 1)) * (size - 2 * pad);
  const dots = view.points
    .map(
      (p) =>
        `<circle cx="${sx(p.x).toFixed(1)}" cy="${sy(p.y).toFixed(1)}" r="5" fill="${colorFor(p.colorCode)}">` +
        `<title>${esc(p.nbs)}</title></circle>`,
    )
    .join("");
  const legend = view.colorCodes
    .map(
      (code, i) =>
        `<circle cx="${pad + i * 90}" cy="12" r="5" fill="${colorFor(code)}"></circle>` +
        `<text x="${pad + i * 90 + 9}" y="16" font-size="11">${esc(code)}</text>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${size} ${size + 24}" width="${size}" height="${size + 24}" role="img">` +
    `${legend}<g transform="translate(0 24)">${dots}` +
    `<text x="${size / 2}" y="${size - 4}" text-anchor="middle" font-size="11">${esc(view.xLabel)}</text>` +
    `<text x="10" y="${size / 2}" font-size="11" transform="rotate(-90 10 ${size / 2})" text-anchor="middle">${esc(view.yLabel)}</text>` +
    `</g></svg>`
  );
}

export function evennessChart(view: EvennessView, colorOf: (nbs: string) => string, width = 680): string {
  const barWidth = Math.max(Math.floor((width - 40) / Math.max(view.bars.length, 1)), 6);
  const height = 180;
  const bars = view.bars
    .map((bar, i) => {
      const x = 30 + i * barWidth;
      if (bar.evenness === null) {
        return `<text x="${x}" y="${height - 24}" font-size="9" transform="rotate(-60 ${x} ${height - 24})">${esc(bar.nbs)}*</text>`;
      }
      const barHeight = Math.round(bar.evenness * (height - 50));
      return (
        `<rect x="${x}" y="${height - 36 - barHeight}" width="${barWidth - 2}" height="${barHeight}" fill="${colorOf(bar.nbs)}">` +
        `<title>${esc(bar.nbs)}: ${bar.evenness.toFixed(3)}</title></rect>` +
        `<text x="${x}" y="${height - 24}" font-size="9" transform="rotate(-60 ${x} ${height - 24})">${esc(bar.nbs)}</text>`
      );
    })
    .join("");
  return `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">${bars}</svg>`;
}
