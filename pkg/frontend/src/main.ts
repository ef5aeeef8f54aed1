// Browser entry point: wires the three flows to the DOM.  All state lives
// in the controllers; this file only renders and forwards events.

import { AnnotationApi, ApiError } from "./api.js";
import { hotkeyLegend } from "./hotkeys.js";
import { LabelingController, renderProgress } from "./labeling.js";
import {
  SchemaMismatchError,
  disagreements,
  framesForCell,
  renderConfusionHeatmap,
  renderFrameList,
  renderPrecisionBars,
  renderSummary,
} from "./review.js";
import { TruthController, renderFrameOverlay } from "./truth.js";
import type { ReportJson } from "./types.js";

const api = new AnnotationApi("");
const annotatorId =
  new URLSearchParams(window.location.search).get("annotator") ?? "annotator-1";

const app = document.getElementById("app")!;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

function showError(message: string | null): void {
  const box = el("error");
  box.textContent = message ?? "";
  box.classList.toggle("visible", message !== null);
}

// --- labeling tab ---

const labeling = new LabelingController(api, annotatorId);

function renderLabeling(): void {
  const crop = labeling.current();
  el("label-progress").innerHTML = renderProgress(labeling.progressRows());
  el("label-hotkeys").textContent = hotkeyLegend(labeling.hotkeys) + "  [n] skip  [p] back";
  el("label-remaining").textContent = `${labeling.remaining()} crops in queue`;
  const img = el("crop-image") as HTMLImageElement;
  if (crop === null) {
    img.removeAttribute("src");
    el("crop-meta").textContent = "queue empty — refresh to pull newly unlabeled crops";
  } else {
    img.src = api.cropImageUrl(crop.crop_id);
    el("crop-meta").textContent =
      `${crop.crop_id} (frame ${crop.frame_index}, t=${(crop.timestamp_us / 1e6).toFixed(2)}s)`;
  }
  showError(labeling.lastError);
}

// --- truth tab ---

const truth = new TruthController(api, annotatorId);

function renderTruth(): void {
  const frame = truth.current();
  el("truth-hotkeys").textContent =
    hotkeyLegend(truth.hotkeys) + "  [x] none  [n] next  [p] prev";
  if (frame === null) {
    el("truth-frame").innerHTML = `<p class="empty">no frames in this minute</p>`;
  } else {
    el("truth-frame").innerHTML = renderFrameOverlay(frame);
    const coded = truth.coded.get(frame.frame_index);
    el("truth-meta").textContent =
      `frame ${frame.frame_index} (t=${(frame.timestamp_us / 1e6).toFixed(2)}s)` +
      (frame.gaze === null ? " — no gaze" : "") +
      (coded === undefined ? "" : ` — coded ${coded}`);
  }
  showError(truth.lastError);
}

// --- review tab ---

async function renderReview(): Promise<void> {
  const pane = el("review-pane");
  let report: ReportJson;
  try {
    report = await api.getReport();
    pane.innerHTML =
      renderSummary(report) +
      `<h3>Confusion matrix</h3>` +
      renderConfusionHeatmap(report) +
      `<h3>Per-student precision</h3>` +
      renderPrecisionBars(report) +
      `<h3>Disagreements</h3><div id="cell-frames">` +
      renderFrameList(disagreements(report)) +
      `</div>`;
  } catch (err) {
    if (err instanceof SchemaMismatchError) {
      pane.innerHTML = `<p class="error visible">${err.message}</p>`;
    } else if (err instanceof ApiError && err.status === 404) {
      pane.innerHTML = `<p class="empty">no report yet — run the evaluate command first</p>`;
    } else {
      pane.innerHTML = `<p class="error visible">${String(err)}</p>`;
    }
    return;
  }
  for (const cell of pane.querySelectorAll<HTMLTableCellElement>("td.cell")) {
    cell.addEventListener("click", () => {
      el("cell-frames").innerHTML = renderFrameList(
        framesForCell(report, cell.dataset.true!, cell.dataset.pred!),
      );
    });
  }
}

// --- tab plumbing ---

type Tab = "label" | "truth" | "review";
let activeTab: Tab = "label";

function switchTab(tab: Tab): void {
  activeTab = tab;
  for (const section of app.querySelectorAll<HTMLElement>("section[data-tab]")) {
    section.hidden = section.dataset.tab !== tab;
  }
  for (const button of app.querySelectorAll<HTMLButtonElement>("nav button")) {
    button.classList.toggle("active", button.dataset.tab === tab);
  }
  if (tab === "review") void renderReview();
}

async function boot(): Promise<void> {
  for (const button of app.querySelectorAll<HTMLButtonElement>("nav button")) {
    button.addEventListener("click", () => switchTab(button.dataset.tab as Tab));
  }
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    if (activeTab === "label") {
      void labeling.handleKey(event.key).then(renderLabeling);
    } else if (activeTab === "truth") {
      void truth.handleKey(event.key).then(renderTruth);
    }
  });
  el("refresh").addEventListener("click", () => {
    void labeling.refresh().then(renderLabeling);
  });
  try {
    await labeling.start();
    await truth.start();
  } catch (err) {
    showError(`cannot reach the annotation API: ${String(err)}`);
    return;
  }
  el("annotator").textContent = `annotator: ${annotatorId}`;
  renderLabeling();
  renderTruth();
  switchTab("label");
}

void boot();
