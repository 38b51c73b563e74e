/**
 * Render functions: state in, HTML string out. The browser layer binds
 * events by delegation over data-* attributes, so everything here stays
 * testable without a DOM.
 */

import { fitViewport, latLonToPx, type DrawnBox, type MapViewport } from "./map.js";
import type {
  AugmentationMatchJson,
  ColumnProfileJson,
  DatasetProfileJson,
  ErrorEnvelopeJson,
  SearchResultJson,
  ServiceConfigJson,
  SnippetJson,
  StatsJson,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const TYPE_BADGES: Record<string, string> = {
  categorical: "cat",
  numerical: "num",
  temporal: "time",
  spatial_latitude: "lat",
  spatial_longitude: "lon",
};

// --- result list ---

export function renderResults(results: SearchResultJson[], total: number): string {
  if (results.length === 0) {
    return `<div class="empty-state">No datasets matched your query.</div>`;
  }
  const cards = results.map(renderSnippetCard).join("\n");
  return `<div class="result-count">${total} result(s)</div>\n${cards}`;
}

function renderSnippetCard(result: SearchResultJson): string {
  const s = result.snippet;
  const columns = s.columns
    .map(
      (c) =>
        `<span class="type-chip type-${c.type}">${escapeHtml(c.name)}:${TYPE_BADGES[c.type] ?? "?"}</span>`,
    )
    .join(" ");
  const extent: string[] = [];
  if (s.temporal_extent) {
    extent.push(
      `<span class="extent">${escapeHtml(s.temporal_extent[0].slice(0, 10))} → ${escapeHtml(
        s.temporal_extent[1].slice(0, 10),
      )}</span>`,
    );
  }
  if (s.spatial_extent) {
    extent.push(`<span class="extent">geo</span>`);
  }
  const augment = result.augmentation
    ? `<button class="augment-button" data-action="augment-options" data-dataset-id="${escapeHtml(
        result.dataset_id,
      )}">Augment options (${result.augmentation.mode})</button>`
    : "";
  return `<article class="snippet" data-action="open-detail" data-dataset-id="${escapeHtml(result.dataset_id)}">
  <header><strong>${escapeHtml(s.name)}</strong>
    <span class="score">${result.total_score.toFixed(3)}</span></header>
  <div class="meta">${escapeHtml(s.source)} · ${s.row_count} rows ${extent.join(" ")}</div>
  <div class="columns">${columns}</div>
  ${augment}
</article>`;
}

// --- detail pane ---

export function renderDetail(
  profile: DatasetProfileJson,
  tab: "sample" | "statistics" | "map",
): string {
  const hasMap = profile.spatial_coverage.length > 0;
  const tabs: [string, string][] = [
    ["sample", "Sample"],
    ["statistics", "Detail View"],
  ];
  if (hasMap) {
    tabs.push(["map", "Coverage"]);
  }
  const tabBar = tabs
    .map(
      ([key, label]) =>
        `<button class="tab${tab === key ? " active" : ""}" data-action="detail-tab" data-tab="${key}">${label}</button>`,
    )
    .join("");
  let body = "";
  if (tab === "map" && hasMap) {
    body = renderCoverageMap(profile);
  } else if (tab === "statistics") {
    body = profile.columns.map(renderColumnStatistics).join("\n");
  } else {
    body = renderSampleTable(profile);
  }
  const download = `<a class="download" href="/api/v1/datasets/${encodeURIComponent(profile.id)}/download">Download CSV</a>`;
  return `<section class="detail" data-dataset-id="${escapeHtml(profile.id)}">
  <h2>${escapeHtml(profile.name)}</h2>
  <p class="description">${escapeHtml(profile.description)}</p>
  <div class="meta">${escapeHtml(profile.source)} · ${profile.row_count} rows · ${profile.columns.length} columns ${download}</div>
  <nav class="tabs">${tabBar}</nav>
  <div class="tab-body">${body}</div>
</section>`;
}

function renderSampleTable(profile: DatasetProfileJson): string {
  const header = profile.columns.map((c) => `<th>${escapeHtml(c.name)}</th>`).join("");
  const rows = profile.sample
    .map((row) => `<tr>${row.map((cell) => `<td>${escapeHtml(cell)}</td>`).join("")}</tr>`)
    .join("\n");
  return `<table class="sample-table"><thead><tr>${header}</tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderColumnStatistics(column: ColumnProfileJson): string {
  const effective = column.user_type_override ?? column.detected_type;
  const facts = [
    `type ${effective}${column.user_type_override ? " (override)" : ""}`,
    `nulls ${(column.null_fraction * 100).toFixed(1)}%`,
    `distinct ~${column.distinct_count_estimate}`,
  ];
  if (column.numeric_stats) {
    facts.push(
      `min ${formatNumber(column.numeric_stats.min)}`,
      `mean ${formatNumber(column.numeric_stats.mean)}`,
      `max ${formatNumber(column.numeric_stats.max)}`,
    );
  }
  if (column.temporal_resolution) {
    facts.push(`resolution ${column.temporal_resolution}`);
  }
  return `<div class="column-stats">
  <h4>${escapeHtml(column.name)}</h4>
  <div class="facts">${facts.map((f) => `<span>${escapeHtml(f)}</span>`).join(" · ")}</div>
  ${renderDistribution(column)}
</div>`;
}

/** Value distribution: top-value bars for categories, range bars otherwise. */
export function renderDistribution(column: ColumnProfileJson): string {
  if (column.top_values.length > 0 && column.summary.kind === "categorical") {
    const maxCount = Math.max(...column.top_values.map(([, n]) => n));
    const bars = column.top_values
      .map(
        ([value, count]) =>
          `<div class="bar-row"><span class="bar-label">${escapeHtml(value)}</span>` +
          `<span class="bar" style="width:${Math.round((count / maxCount) * 100)}%"></span>` +
          `<span class="bar-count">${count}</span></div>`,
      )
      .join("");
    return `<div class="histogram">${bars}</div>`;
  }
  const ranges = column.summary.ranges;
  if (ranges && ranges.length > 0 && column.summary.total_count) {
    const total = column.summary.total_count;
    const bars = ranges
      .map(
        ([lo, hi, n]) =>
          `<div class="bar-row"><span class="bar-label">[${formatNumber(lo)}, ${formatNumber(hi)}]</span>` +
          `<span class="bar" style="width:${Math.round((n / total) * 100)}%"></span>` +
          `<span class="bar-count">${n}</span></div>`,
      )
      .join("");
    return `<div class="histogram">${bars}</div>`;
  }
  return "";
}

function formatNumber(value: number): string {
  return Math.abs(value) >= 1e6 || (value !== 0 && Math.abs(value) < 1e-3)
    ? value.toExponential(2)
    : String(Math.round(value * 1000) / 1000);
}

export function renderCoverageMap(profile: DatasetProfileJson): string {
  const boxes: DrawnBox[] = [];
  for (const [latCol] of profile.spatial_coverage) {
    const column = profile.columns.find((c) => c.name === latCol);
    for (const [latMin, latMax, lonMin, lonMax] of column?.summary.boxes ?? []) {
      boxes.push({ latMin, latMax, lonMin, lonMax });
    }
  }
  return renderBoxesSvg(boxes, 420, 260, "coverage-map");
}

export function renderBoxesSvg(
  boxes: DrawnBox[],
  width: number,
  height: number,
  cssClass: string,
  viewport?: MapViewport,
): string {
  const view = viewport ?? fitViewport(boxes, width, height);
  const rects = boxes
    .map((box) => {
      const [x0, y0] = latLonToPx(view, box.latMax, box.lonMin);
      const [x1, y1] = latLonToPx(view, box.latMin, box.lonMax);
      return `<rect x="${x0.toFixed(1)}" y="${y0.toFixed(1)}" width="${(x1 - x0).toFixed(1)}" height="${(y1 - y0).toFixed(1)}" />`;
    })
    .join("");
  return `<svg class="${cssClass}" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">
  <rect class="map-background" x="0" y="0" width="${width}" height="${height}"/>
  ${rects}
</svg>`;
}

// --- search box / filters ---

export function renderSourceFilter(sources: string[], selected: string[]): string {
  const boxes = sources
    .map(
      (s) =>
        `<label><input type="checkbox" data-action="toggle-source" value="${escapeHtml(s)}"${
          selected.includes(s) ? " checked" : ""
        }> ${escapeHtml(s)}</label>`,
    )
    .join("");
  return `<fieldset class="filter sources"><legend>Sources</legend>${boxes}</fieldset>`;
}

// --- augmentation panel ---

export function renderAugmentPanel(
  match: AugmentationMatchJson,
  rightColumns: { name: string; type: string }[],
): string {
  const pairs =
    match.mode === "join"
      ? match.pairs.map((p) => ({
          q: p.query_column,
          c: p.candidate_column,
          score: p.containment_score,
        }))
      : match.column_pairs.map((p) => ({
          q: p.query_column,
          c: p.candidate_column,
          score: p.name_similarity,
        }));
  const pairRows = pairs
    .map(
      (p, i) =>
        `<label class="pair-row"><input type="checkbox" data-action="toggle-pair" data-index="${i}" checked>` +
        `${escapeHtml(p.q)} ↔ ${escapeHtml(p.c)} <span class="score">${p.score.toFixed(2)}</span></label>`,
    )
    .join("");
  let includes = "";
  if (match.mode === "join") {
    const keyColumns = new Set(pairs.map((p) => p.c));
    includes = rightColumns
      .filter((c) => !keyColumns.has(c.name))
      .map(
        (c) => `<div class="include-row">
  <label><input type="checkbox" data-action="toggle-include" value="${escapeHtml(c.name)}"> ${escapeHtml(c.name)}</label>
  <select data-action="set-aggregation" data-column="${escapeHtml(c.name)}">
    ${aggregationOptions(c.type)}
  </select>
</div>`,
      )
      .join("");
    includes = `<fieldset class="includes"><legend>Included after merge</legend>${includes}</fieldset>`;
  }
  return `<section class="augment-panel" data-dataset-id="${escapeHtml(match.dataset_id)}" data-mode="${match.mode}">
  <h3>${match.mode === "join" ? "Join" : "Union"} with ${escapeHtml(match.dataset_id)}</h3>
  <fieldset class="pairs"><legend>Matched columns</legend>${pairRows}</fieldset>
  ${includes}
  <button data-action="run-augmentation">Merge &amp; download</button>
  <div class="augment-errors"></div>
</section>`;
}

function aggregationOptions(columnType: string): string {
  const numeric = columnType === "numerical";
  const options = numeric
    ? ["mean", "sum", "max", "min", "count", "first"]
    : ["first", "count"];
  return options.map((o) => `<option value="${o}">${o}</option>`).join("");
}

export function renderUnionPreview(columns: string[], appended: string[][]): string {
  const header = columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const rows = appended
    .slice(0, 5)
    .map((row) => `<tr>${row.map((cell) => `<td>${escapeHtml(cell)}</td>`).join("")}</tr>`)
    .join("");
  return `<table class="union-preview"><thead><tr>${header}</tr></thead><tbody>${rows}</tbody></table>`;
}

// --- upload ---

export function renderUploadForm(
  config: ServiceConfigJson,
  columns: { name: string; detected: string }[] | null,
): string {
  const metadataInputs = config.custom_metadata_fields
    .map((field) => {
      const required = field.required ? " required" : "";
      if (field.type === "enum") {
        const options = ["", ...field.enum_values]
          .map((v) => `<option value="${escapeHtml(v)}">${escapeHtml(v || "—")}</option>`)
          .join("");
        return `<label>${escapeHtml(field.name)}${field.required ? " *" : ""}
  <select name="meta-${escapeHtml(field.name)}" data-action="set-metadata" data-field="${escapeHtml(field.name)}"${required}>${options}</select></label>`;
      }
      const inputType = field.type === "number" ? "number" : "text";
      return `<label>${escapeHtml(field.name)}${field.required ? " *" : ""}
  <input type="${inputType}" step="any" name="meta-${escapeHtml(field.name)}" data-action="set-metadata" data-field="${escapeHtml(field.name)}"${required}></label>`;
    })
    .join("\n");
  const overrideRows = (columns ?? [])
    .map(
      (c) => `<div class="override-row"><span>${escapeHtml(c.name)}</span>
  <select data-action="set-type-override" data-column="${escapeHtml(c.name)}">
    <option value="">detected: ${escapeHtml(c.detected)}</option>
    <option value="categorical">categorical</option>
    <option value="numerical">numerical</option>
    <option value="temporal">temporal</option>
    <option value="spatial_latitude">spatial latitude</option>
    <option value="spatial_longitude">spatial longitude</option>
  </select></div>`,
    )
    .join("\n");
  return `<form class="upload-form" data-action="submit-upload">
  <input type="file" accept=".csv,text/csv" data-action="pick-upload-file">
  <label>Name <input type="text" data-action="set-upload-name" required></label>
  <label>Description <textarea data-action="set-upload-description"></textarea></label>
  <fieldset class="custom-metadata"><legend>Metadata</legend>${metadataInputs}</fieldset>
  ${columns ? `<fieldset class="type-overrides"><legend>Correct data types</legend>${overrideRows}</fieldset>` : ""}
  <button type="submit">Upload</button>
  <div class="upload-errors"></div>
</form>`;
}

// --- misc ---

export function renderError(error: ErrorEnvelopeJson): string {
  return `<div class="error-banner" data-code="${escapeHtml(error.code)}">
  <strong>${escapeHtml(error.code)}</strong> ${escapeHtml(error.message)}
</div>`;
}

export function renderStats(stats: StatsJson): string {
  const sources = Object.entries(stats.per_source)
    .map(([name, n]) => `<li>${escapeHtml(name)}: ${n}</li>`)
    .join("");
  const types = Object.entries(stats.per_type)
    .map(([name, n]) => `<li>${escapeHtml(name)}: ${n}</li>`)
    .join("");
  return `<aside class="collection-stats">
  <h3>${stats.dataset_count} datasets indexed</h3>
  <ul class="by-source">${sources}</ul>
  <ul class="by-type">${types}</ul>
</aside>`;
}

export function snippetHasMap(snippet: SnippetJson): boolean {
  return snippet.spatial_extent !== undefined;
}
