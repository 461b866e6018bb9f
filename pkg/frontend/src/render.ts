/**
 * Deterministic view rendering: (session data, view state) in, markup
 * string out. No DOM reads, no Date/Math.random — the same state always
 * yields the same markup, which the tests assert directly.
 *
 * Every number that appears as text comes verbatim from a service
 * payload (or is a form value the officer typed). Static labels are
 * deliberately digit-free so the contract "displayed numbers are server
 * numbers" stays checkable by scanning rendered text.
 */

import {
  DRAFT_LINE_COLOR,
  ENDPOINT_RADIUS_M,
  LAYER_FILL_OPACITY,
  LAYER_STROKE,
  overlapColor,
  PLAN_PAD_M,
  REFERENCE_STROKE,
  SIDE_PREVIEW_OPACITY,
} from "./colors.js";
import { halfPlanePoints, padBounds, viewBoxAttr, worldBounds } from "./plan.js";
import { emptyStoreyNames, lineComplete } from "./state.js";
import type { AppState } from "./state.js";
import type {
  ApiFailure,
  FootprintStorey,
  FootprintsResponse,
  OverhangResponse,
  OverlapsResponse,
  PlanPoint,
} from "./types.js";

const EMPTY_STOREY_TIP =
  "no footprint polygon at this storey's cut height";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Payload numbers render via String() — no rounding, no padding. */
export function num(value: number): string {
  return String(value);
}

function pointText(point: PlanPoint | null): string {
  if (point === null) {
    return "awaiting click";
  }
  return `${num(point[0])}, ${num(point[1])}`;
}

function disabledAttr(disabled: boolean): string {
  return disabled ? " disabled" : "";
}

function renderHeader(state: AppState): string {
  const { data } = state;
  const status = data.busy
    ? '<span class="status busy">working…</span>'
    : `<span class="status">${data.modelName === null
        ? "no model loaded" : esc(data.modelName)}</span>`;
  return `<header><h1>bimcheck plan review</h1>${status}</header>`;
}

function renderFailureBanner(failure: ApiFailure | null): string {
  if (failure === null) {
    return "";
  }
  const detail = failure.detail === null || failure.detail === undefined
    ? "" : ` — ${esc(String(failure.detail))}`;
  return `<div class="banner failure" role="alert">`
    + `<strong>${esc(failure.code)}</strong> `
    + `${esc(failure.message)}${detail}</div>`;
}

function renderUpload(state: AppState): string {
  const { data } = state;
  const hint = data.sessionId === null
    ? '<p class="hint">choose an IFC model to start a review session</p>'
    : "";
  return `<section class="upload"><h2>model</h2>${hint}`
    + `<input type="file" accept=".ifc" data-field="modelFile"`
    + `${disabledAttr(data.busy)}></section>`;
}

function renderStoreyList(state: AppState): string {
  const { data, view } = state;
  if (data.storeys.length === 0) {
    return "";
  }
  const empty = new Set(emptyStoreyNames(data));
  const rows = data.storeys.map((storey) => {
    const name = storey.name;
    const isEmpty = empty.has(name);
    const isReference = view.referenceStorey === name;
    const visible = !view.hiddenLayers.includes(name);
    const classes = ["storey-row"];
    if (isEmpty) {
      classes.push("empty");
    }
    if (isReference) {
      classes.push("reference");
    }
    if (view.selectedStorey === name) {
      classes.push("selected");
    }
    const tip = isEmpty ? ` title="${esc(EMPTY_STOREY_TIP)}"` : "";
    return `<li class="${classes.join(" ")}" data-storey-row="${esc(name)}"${tip}>`
      + `<label><input type="checkbox" data-action="toggle-layer"`
      + ` data-storey="${esc(name)}"${visible ? " checked" : ""}`
      + `${disabledAttr(data.busy)}> ${esc(name)}</label>`
      + `<span class="muted">elevation ${num(storey.elevation_m)} m`
      + ` · elements ${num(storey.element_count)}</span>`
      + `<button data-action="pick-reference" data-storey="${esc(name)}"`
      + `${disabledAttr(data.busy || isEmpty)}${tip}`
      + ` class="${isReference ? "active" : ""}">reference</button>`
      + `</li>`;
  });
  return `<section class="storeys"><h2>storeys</h2>`
    + `<ul>${rows.join("")}</ul></section>`;
}

function renderParamForm(state: AppState): string {
  const { data, view } = state;
  const p = view.params;
  const off = disabledAttr(data.busy);
  const field = (label: string, name: string, value: string): string =>
    `<label>${label}<input data-field="${name}"`
    + ` value="${esc(value)}"${off}></label>`;
  return `<section class="params"><h2>footprint parameters</h2>`
    + field("cut offset (m)", "cutOffset", p.cutOffset)
    + field("sample spacing (m)", "sampleSpacing", p.sampleSpacing)
    + field("cluster radius (m)", "dbscanEps", p.dbscanEps)
    + field("cluster minimum points", "dbscanMinPts", p.dbscanMinPts)
    + field("hull neighbours", "hullK", p.hullK)
    + `<button data-action="rerun"${off}>recompute footprints</button>`
    + `</section>`;
}

function renderLegend(footprints: FootprintsResponse): string {
  const seen = new Set<number>();
  const distinct: number[] = [];
  for (const storey of footprints.storeys) {
    if (storey.polygons.length === 0 || seen.has(storey.overlap_pct)) {
      continue;
    }
    seen.add(storey.overlap_pct);
    distinct.push(storey.overlap_pct);
  }
  distinct.sort((a, b) => b - a);
  const entries = distinct.map((value) =>
    `<span class="legend-entry"><span class="swatch"`
    + ` style="background:${overlapColor(value)}"></span>`
    + `${num(value)}%</span>`);
  return `<div class="legend">${entries.join("")}</div>`;
}

function renderLayer(
  storey: FootprintStorey,
  isReference: boolean,
): string {
  if (storey.polygons.length === 0) {
    return "";
  }
  const fill = overlapColor(storey.overlap_pct);
  const stroke = isReference ? REFERENCE_STROKE : LAYER_STROKE;
  const strokeWidth = isReference ? "2.5" : "1";
  const polygons = storey.polygons.map((ring) => {
    const points = ring.map(([x, y]) => `${x},${y}`).join(" ");
    return `<polygon points="${points}" fill="${fill}"`
      + ` fill-opacity="${LAYER_FILL_OPACITY}" stroke="${stroke}"`
      + ` stroke-width="${strokeWidth}"`
      + ` vector-effect="non-scaling-stroke"></polygon>`;
  });
  const title = `${esc(storey.name)} · elevation ${num(storey.elevation_m)} m`
    + ` · area ${num(storey.area_m2)} m² · overlap ${num(storey.overlap_pct)}%`;
  return `<g class="layer" data-storey-layer="${esc(storey.name)}">`
    + `${polygons.join("")}<title>${title}</title></g>`;
}

function renderDraftOverlay(state: AppState): string {
  const { data, view } = state;
  const line = view.line;
  if (line.a === null || data.footprints === null) {
    return "";
  }
  const bounds = worldBounds(data.footprints.storeys);
  if (bounds === null) {
    return "";
  }
  const parts: string[] = [];
  if (lineComplete(line) && line.a !== null && line.b !== null) {
    const shade = halfPlanePoints(line.a, line.b, line.side,
                                  padBounds(bounds, PLAN_PAD_M));
    parts.push(`<polygon class="side-preview" points="${shade}"`
      + ` fill="${DRAFT_LINE_COLOR}"`
      + ` fill-opacity="${SIDE_PREVIEW_OPACITY}"></polygon>`);
    parts.push(`<line x1="${line.a[0]}" y1="${line.a[1]}"`
      + ` x2="${line.b[0]}" y2="${line.b[1]}"`
      + ` stroke="${DRAFT_LINE_COLOR}" stroke-width="2"`
      + ` vector-effect="non-scaling-stroke"></line>`);
  }
  for (const endpoint of [line.a, line.b]) {
    if (endpoint !== null) {
      parts.push(`<circle cx="${endpoint[0]}" cy="${endpoint[1]}"`
        + ` r="${ENDPOINT_RADIUS_M}" fill="${DRAFT_LINE_COLOR}"></circle>`);
    }
  }
  return `<g class="draft">${parts.join("")}</g>`;
}

export function renderPlanSvg(state: AppState): string {
  const { data, view } = state;
  const footprints = data.footprints;
  if (footprints === null) {
    return "";
  }
  const bounds = worldBounds(footprints.storeys);
  if (bounds === null) {
    return "";
  }
  const viewBox = viewBoxAttr(padBounds(bounds, PLAN_PAD_M));
  const layers = footprints.storeys
    .filter((storey) => !view.hiddenLayers.includes(storey.name))
    .map((storey) => renderLayer(
      storey, storey.name === view.referenceStorey));
  return `<svg data-role="plan" viewBox="${viewBox}"`
    + ` preserveAspectRatio="xMidYMid meet">`
    + `<g transform="scale(1,-1)">${layers.join("")}`
    + `${renderDraftOverlay(state)}</g></svg>`;
}

function renderParamsEcho(footprints: FootprintsResponse): string {
  const p = footprints.params;
  return `<p class="params-echo">computed with cut offset `
    + `${num(p.cut_offset_m)} m · spacing ${num(p.sample_spacing_m)} m`
    + ` · cluster radius ${num(p.dbscan_eps_m)} m`
    + ` · minimum points ${num(p.dbscan_min_pts)}`
    + ` · hull neighbours ${num(p.hull_k)}</p>`;
}

function renderStoreyDetail(state: AppState): string {
  const { data, view } = state;
  const footprints = data.footprints;
  if (footprints === null) {
    return "";
  }
  const storey = footprints.storeys.find(
    (item) => item.name === view.selectedStorey);
  if (storey === undefined) {
    return '<p class="storey-detail muted">hover a storey for details</p>';
  }
  return `<p class="storey-detail"><strong>${esc(storey.name)}</strong>`
    + ` · elevation ${num(storey.elevation_m)} m`
    + ` · area ${num(storey.area_m2)} m²`
    + ` · overlap ${num(storey.overlap_pct)}%</p>`;
}

function renderExportLink(state: AppState): string {
  const svg = renderPlanSvg(state);
  if (svg === "") {
    return "";
  }
  const href = `data:image/svg+xml,${encodeURIComponent(svg)}`;
  return `<a class="export" download="plan.svg" href="${href}">`
    + `export plan image</a>`;
}

function renderPlanSection(state: AppState): string {
  const footprints = state.data.footprints;
  const svg = renderPlanSvg(state);
  if (footprints === null || svg === "") {
    return `<section class="plan"><h2>plan</h2>`
      + `<p class="placeholder">upload a model to see storey footprints`
      + `</p></section>`;
  }
  return `<section class="plan"><h2>plan</h2>`
    + renderLegend(footprints)
    + svg
    + renderStoreyDetail(state)
    + renderParamsEcho(footprints)
    + renderExportLink(state)
    + `</section>`;
}

function renderOverlapTable(
  payload: OverlapsResponse,
  caption: string,
): string {
  const rows = payload.rows.map((row) =>
    `<tr><td>${esc(row[0])}</td><td>${num(row[1])}</td>`
    + `<td>${num(row[2])}</td><td>${num(row[3])}%</td></tr>`);
  return `<table class="overlaps"><caption>${esc(caption)} — reference `
    + `${esc(payload.reference_storey)}</caption>`
    + `<thead><tr><th>storey</th><th>elevation (m)</th>`
    + `<th>polygons</th><th>overlap</th></tr></thead>`
    + `<tbody>${rows.join("")}</tbody></table>`;
}

function renderOverlapSection(state: AppState): string {
  const { data } = state;
  if (data.overlaps === null) {
    return "";
  }
  const cacheBadge = data.cacheHit
    ? '<span class="cache-badge">reference unchanged — cached result</span>'
    : "";
  const previous = data.previousOverlaps === null
    ? ""
    : `<aside class="comparison">`
      + renderOverlapTable(data.previousOverlaps, "previous run")
      + `</aside>`;
  return `<section class="overlap-section"><h2>overlap by storey</h2>`
    + cacheBadge
    + `<div class="overlap-tables">`
    + renderOverlapTable(data.overlaps, "current")
    + previous
    + `</div></section>`;
}

function renderOverhangSection(state: AppState): string {
  const overhang = state.data.overhang;
  if (overhang === null) {
    return "";
  }
  return `<section class="overhang"><h2>overhang</h2>`
    + renderOverhangResult(overhang)
    + `</section>`;
}

export function renderOverhangResult(payload: OverhangResponse): string {
  const labels = Object.keys(payload.measured).sort();
  const blocks = labels.map((label) => {
    const measure = payload.measured[label];
    if (measure === undefined) {
      return "";
    }
    const failed = payload.evidence.some(
      (entry) => entry.startsWith(`${label}:`));
    const badge = failed
      ? '<span class="badge fail">FAIL</span>'
      : '<span class="badge pass">PASS</span>';
    const perStorey = Object.entries(measure.per_storey_m)
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([name, distance]) =>
        `<tr><td>${esc(name)}</td><td>${num(distance)} m</td></tr>`)
      .join("");
    return `<div class="line-result"><h3>${esc(label)} ${badge}</h3>`
      + `<p>max overhang <strong>${num(measure.max_overhang_m)} m</strong>`
      + ` against limit ${num(measure.limit_m)} m`
      + ` · worst storey ${esc(measure.worst_storey)}</p>`
      + `<table class="per-storey"><thead><tr><th>storey</th>`
      + `<th>overhang</th></tr></thead><tbody>${perStorey}</tbody></table>`
      + `</div>`;
  });
  const notes = payload.notes.length === 0
    ? ""
    : `<ul class="notes">${payload.notes.map(
        (note) => `<li>${esc(note)}</li>`).join("")}</ul>`;
  return `<div class="overhang-result" data-verdict="${esc(payload.verdict)}">`
    + blocks.join("") + notes + `</div>`;
}

function renderLinePanel(state: AppState): string {
  const { data, view } = state;
  if (data.footprints === null) {
    return "";
  }
  const line = view.line;
  const off = disabledAttr(data.busy);
  const sideButton = (side: "left" | "right"): string =>
    `<button data-action="line-side" data-side="${side}"`
    + ` class="${line.side === side ? "active" : ""}"${off}>${side}</button>`;
  const note = line.note === null
    ? "" : `<p class="inline-note">${esc(line.note)}</p>`;
  const runDisabled = data.busy || !lineComplete(line);
  return `<section class="line-panel"><h2>facade line</h2>`
    + `<p class="hint">click two footprint vertices on the plan, then pick`
    + ` the street side</p>`
    + `<p>point A: <span class="coords">${pointText(line.a)}</span>`
    + ` · point B: <span class="coords">${pointText(line.b)}</span></p>`
    + `<div class="side-toggle">side: ${sideButton("left")}`
    + `${sideButton("right")}</div>`
    + `<label>label<input data-field="lineLabel"`
    + ` value="${esc(line.label)}"${off}></label>`
    + `<label>limit (m)<input data-field="lineLimit"`
    + ` value="${esc(line.limitText)}"${off}></label>`
    + `<label>snap radius (m)<input data-field="snapRadius"`
    + ` value="${esc(String(view.snapRadiusM))}"${off}></label>`
    + note
    + `<button data-action="run-overhang"${disabledAttr(runDisabled)}>`
    + `measure overhang</button>`
    + `<button data-action="reset-line"${off}>clear line</button>`
    + `</section>`;
}

export function renderApp(state: AppState): string {
  return `<div class="app">`
    + renderHeader(state)
    + renderFailureBanner(state.data.failure)
    + `<div class="columns">`
    + `<aside class="sidebar">`
    + renderUpload(state)
    + renderStoreyList(state)
    + renderParamForm(state)
    + `</aside>`
    + `<main class="content">`
    + renderPlanSection(state)
    + renderOverlapSection(state)
    + renderOverhangSection(state)
    + renderLinePanel(state)
    + `</main>`
    + `</div></div>`;
}
