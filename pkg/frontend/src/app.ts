/**
 * Browser wiring: event delegation over the rendered HTML, in-flight search
 * cancellation, and the download handoff. All decisions live in state.ts /
 * views.ts; this file only moves data between the DOM and those modules.
 */

import { ApiClient, ApiError } from "./api.js";
import { boxFromDrag, WORLD_VIEWPORT } from "./map.js";
import {
  emptyQueryState,
  hasAnyConstraint,
  selectionFromMatch,
  toAugmentationSpec,
  toQueryJson,
  uploadMetadataJson,
  type AugmentSelection,
  type UiQueryState,
  type UploadFormState,
} from "./state.js";
import type { AugmentationMatchJson, SearchResultJson, ServiceConfigJson } from "./types.js";
import {
  renderAugmentPanel,
  renderBoxesSvg,
  renderDetail,
  renderError,
  renderResults,
  renderSourceFilter,
  renderStats,
  renderUploadForm,
} from "./views.js";

const api = new ApiClient("");
let state: UiQueryState = emptyQueryState();
let serviceConfig: ServiceConfigJson | null = null;
let lastResults: SearchResultJson[] = [];
let currentSelection: AugmentSelection | null = null;
let inFlight: AbortController | null = null;
const uploadForm: UploadFormState = {
  file: null,
  name: "",
  description: "",
  typeOverrides: {},
  customMetadata: {},
};

function el<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector(selector);
  if (!node) {
    throw new Error(`missing element ${selector}`);
  }
  return node as T;
}

async function runSearch(): Promise<void> {
  if (!hasAnyConstraint(state)) {
    el("#results").innerHTML = `<div class="empty-state">Add a keyword or a filter to search.</div>`;
    return;
  }
  inFlight?.abort();
  inFlight = new AbortController();
  try {
    const response = await api.search(
      toQueryJson(state),
      state.related.file,
      inFlight.signal,
    );
    lastResults = response.results;
    el("#results").innerHTML = renderResults(response.results, response.total);
  } catch (error) {
    if (error instanceof DOMException && error.name === "AbortError") {
      return; // superseded by a newer query
    }
    showError(error, "#results");
  }
}

function showError(error: unknown, target: string): void {
  if (error instanceof ApiError) {
    el(target).innerHTML = renderError(error.envelope);
  } else {
    el(target).innerHTML = renderError({
      code: "ClientError",
      message: String(error),
      details: {},
    });
  }
}

async function openDetail(datasetId: string): Promise<void> {
  state.selectedDataset = datasetId;
  try {
    const profile = await api.dataset(datasetId);
    el("#detail").innerHTML = renderDetail(profile, state.detailTab);
  } catch (error) {
    showError(error, "#detail");
  }
}

async function openAugmentPanel(datasetId: string): Promise<void> {
  const result = lastResults.find((r) => r.dataset_id === datasetId);
  if (!result?.augmentation) {
    return;
  }
  currentSelection = selectionFromMatch(result.augmentation);
  const profile = await api.dataset(datasetId);
  el("#augment").innerHTML = renderAugmentPanel(
    result.augmentation,
    profile.columns.map((c) => ({ name: c.name, type: c.user_type_override ?? c.detected_type })),
  );
}

async function runAugmentation(): Promise<void> {
  if (!currentSelection) {
    return;
  }
  try {
    const spec = toAugmentationSpec(currentSelection);
    const { csv } = await api.augment(
      state.related.datasetId,
      currentSelection.resultId,
      spec,
      state.related.file,
    );
    const blob = new Blob([csv], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "augmented.csv";
    link.click();
    URL.revokeObjectURL(link.href);
  } catch (error) {
    showError(error, ".augment-errors");
  }
}

async function submitUpload(): Promise<void> {
  if (!uploadForm.file) {
    return;
  }
  try {
    const { id } = await api.upload(uploadForm.file, uploadMetadataJson(uploadForm));
    el("#upload").innerHTML = `<div class="upload-done">Indexed as ${id}</div>`;
    await refreshStats();
  } catch (error) {
    showError(error, ".upload-errors");
  }
}

async function refreshStats(): Promise<void> {
  try {
    el("#stats").innerHTML = renderStats(await api.stats());
  } catch {
    // stats panel is decorative; ignore transient failures
  }
}

function updateDrawnBoxOverlay(): void {
  const overlay = el("#map-overlay");
  if (state.spatial.mode === "box" && state.spatial.box) {
    overlay.innerHTML = renderBoxesSvg([state.spatial.box], 360, 180, "drawn-box", {
      ...WORLD_VIEWPORT,
    });
  } else {
    overlay.innerHTML = renderBoxesSvg([], 360, 180, "drawn-box", { ...WORLD_VIEWPORT });
  }
}

function bindEvents(): void {
  el("#keywords").addEventListener("input", (event) => {
    state.keywordText = (event.target as HTMLInputElement).value;
  });
  el("#search-button").addEventListener("click", () => void runSearch());
  el("#temporal-start").addEventListener("change", (event) => {
    state.temporal.start = (event.target as HTMLInputElement).value;
    state.temporal.enabled = Boolean(state.temporal.start && state.temporal.end);
  });
  el("#temporal-end").addEventListener("change", (event) => {
    state.temporal.end = (event.target as HTMLInputElement).value;
    state.temporal.enabled = Boolean(state.temporal.start && state.temporal.end);
  });
  el("#area-input").addEventListener("change", (event) => {
    state.spatial.areaText = (event.target as HTMLInputElement).value;
    state.spatial.mode = state.spatial.areaText.trim() ? "area" : "none";
  });
  el("#clear-box").addEventListener("click", () => {
    state.spatial = { mode: "none", box: null, areaText: "" };
    updateDrawnBoxOverlay();
  });
  el("#related-file").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    state.related.file = input.files?.[0] ?? null;
    state.related.fileName = state.related.file?.name ?? null;
  });
  el("#related-mode").addEventListener("change", (event) => {
    state.related.mode = (event.target as HTMLSelectElement).value as
      | "join"
      | "union"
      | "either";
  });

  const map = el("#map-canvas");
  map.addEventListener("mousedown", (event) => {
    const rect = map.getBoundingClientRect();
    state.drawing = {
      active: true,
      startPx: [event.clientX - rect.left, event.clientY - rect.top],
      currentPx: null,
    };
  });
  map.addEventListener("mousemove", (event) => {
    if (!state.drawing.active || !state.drawing.startPx) {
      return;
    }
    const rect = map.getBoundingClientRect();
    state.drawing.currentPx = [event.clientX - rect.left, event.clientY - rect.top];
    state.spatial = {
      mode: "box",
      box: boxFromDrag(WORLD_VIEWPORT, state.drawing.startPx, state.drawing.currentPx),
      areaText: "",
    };
    updateDrawnBoxOverlay();
  });
  map.addEventListener("mouseup", () => {
    state.drawing = { active: false, startPx: null, currentPx: null };
  });

  document.body.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) {
      return;
    }
    const action = target.dataset.action;
    if (action === "open-detail" && target.dataset.datasetId) {
      void openDetail(target.dataset.datasetId);
    } else if (action === "augment-options" && target.dataset.datasetId) {
      event.stopPropagation();
      void openAugmentPanel(target.dataset.datasetId);
    } else if (action === "detail-tab" && state.selectedDataset) {
      state.detailTab = target.dataset.tab as typeof state.detailTab;
      void openDetail(state.selectedDataset);
    } else if (action === "run-augmentation") {
      void runAugmentation();
    }
  });

  document.body.addEventListener("change", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (!action || !currentSelection) {
      if (action === "toggle-source") {
        const input = target as HTMLInputElement;
        state.sources = input.checked
          ? [...state.sources, input.value]
          : state.sources.filter((s) => s !== input.value);
      }
      return;
    }
    if (action === "toggle-include") {
      const input = target as HTMLInputElement;
      currentSelection.includeColumns = input.checked
        ? [...currentSelection.includeColumns, input.value]
        : currentSelection.includeColumns.filter((c) => c !== input.value);
    } else if (action === "set-aggregation") {
      const select = target as HTMLSelectElement;
      const column = select.dataset.column;
      if (column) {
        currentSelection.aggregations[column] = select.value as never;
      }
    } else if (action === "toggle-pair") {
      const input = target as HTMLInputElement;
      const index = Number(input.dataset.index);
      const pair = currentSelection.pairs[index];
      if (!input.checked && pair) {
        currentSelection.pairs = currentSelection.pairs.filter((_, i) => i !== index);
      }
    }
  });
}

async function boot(): Promise<void> {
  serviceConfig = await api.config();
  el("#source-filter").innerHTML = renderSourceFilter(serviceConfig.sources, state.sources);
  el("#upload").innerHTML = renderUploadForm(serviceConfig, null);
  el("#upload").addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset.action === "pick-upload-file") {
      uploadForm.file = target.files?.[0] ?? null;
    } else if (target.dataset.action === "set-upload-name") {
      uploadForm.name = target.value;
    } else if (target.dataset.action === "set-upload-description") {
      uploadForm.description = target.value;
    } else if (target.dataset.action === "set-metadata" && target.dataset.field) {
      if (target.value) {
        uploadForm.customMetadata[target.dataset.field] = target.value;
      } else {
        delete uploadForm.customMetadata[target.dataset.field];
      }
    } else if (target.dataset.action === "set-type-override" && target.dataset.column) {
      if (target.value) {
        uploadForm.typeOverrides[target.dataset.column] = target.value as never;
      } else {
        delete uploadForm.typeOverrides[target.dataset.column];
      }
    }
  });
  el("#upload").addEventListener("submit", (event) => {
    event.preventDefault();
    void submitUpload();
  });
  bindEvents();
  updateDrawnBoxOverlay();
  await refreshStats();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", () => void boot());
}
