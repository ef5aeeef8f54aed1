// Read-only result browser: confusion heatmap, per-student precision bars,
// and the frame-level disagreement list.  All numbers come straight from
// the server's report JSON; nothing is recomputed client-side.

import type { ReportJson } from "./types.js";

export class SchemaMismatchError extends Error {}

export function checkReportSchema(report: { format?: string; version?: number }): void {
  if (report.format !== "classgaze-report") {
    throw new SchemaMismatchError(
      `incompatible report: expected format "classgaze-report", got ${JSON.stringify(report.format)}`,
    );
  }
  if (report.version !== 1) {
    throw new SchemaMismatchError(
      `incompatible report: this UI understands version 1, file is version ${report.version}`,
    );
  }
}

function shade(count: number, max: number): string {
  if (max <= 0) return "rgba(31, 119, 180, 0)";
  const alpha = count / max;
  return `rgba(31, 119, 180, ${alpha.toFixed(3)})`;
}

export function renderConfusionHeatmap(report: ReportJson): string {
  checkReportSchema(report);
  const { class_set, counts } = report.confusion;
  const max = Math.max(...counts.flat());
  const head =
    `<tr><th class="corner">true \\ predicted</th>` +
    class_set.map((cls) => `<th scope="col">${cls}</th>`).join("") +
    "</tr>";
  const body = class_set
    .map((trueCls, i) => {
      const cells = class_set
        .map((predCls, j) => {
          const count = counts[i]![j]!;
          return (
            `<td class="cell" data-true="${trueCls}" data-pred="${predCls}" ` +
            `data-count="${count}" style="background:${shade(count, max)}">${count}</td>`
          );
        })
        .join("");
      return `<tr><th scope="row">${trueCls}</th>${cells}</tr>`;
    })
    .join("");
  return `<table class="heatmap">${head}${body}</table>`;
}

export function renderPrecisionBars(report: ReportJson): string {
  checkReportSchema(report);
  const rows = Object.entries(report.per_class)
    .map(([student, m]) => {
      const width = Math.round(m.precision * 100);
      return (
        `<div class="bar-row" data-student="${student}">` +
        `<span class="bar-label">${student}</span>` +
        `<span class="bar" style="width:${width}%"></span>` +
        `<span class="bar-value">${m.precision.toFixed(2)} (n=${m.support})</span></div>`
      );
    })
    .join("");
  return `<div class="precision-bars">${rows}</div>`;
}

export interface FramePair {
  frame_index: number;
  truth: string;
  predicted: string;
}

export function framePairs(report: ReportJson): FramePair[] {
  return report.frames.map(([frame_index, truth, predicted]) => ({
    frame_index,
    truth,
    predicted,
  }));
}

export function disagreements(report: ReportJson): FramePair[] {
  return framePairs(report).filter((pair) => pair.truth !== pair.predicted);
}

/** Frames behind one heatmap cell (what a cell click drills into). */
export function framesForCell(report: ReportJson, trueCls: string, predCls: string): FramePair[] {
  return framePairs(report).filter(
    (pair) => pair.truth === trueCls && pair.predicted === predCls,
  );
}

export function renderFrameList(pairs: FramePair[]): string {
  if (pairs.length === 0) return `<p class="empty">no frames</p>`;
  const items = pairs
    .map(
      (pair) =>
        `<li data-frame="${pair.frame_index}">frame ${pair.frame_index}: ` +
        `coded ${pair.truth}, predicted ${pair.predicted}</li>`,
    )
    .join("");
  return `<ol class="frame-list">${items}</ol>`;
}

export function renderSummary(report: ReportJson): string {
  checkReportSchema(report);
  const kappa = report.kappa === undefined ? "" : ` | kappa ${report.kappa.toFixed(2)}`;
  return (
    `<p class="summary">${report.classroom_id} | ${report.classifier} on ${report.embeddings} | ` +
    `accuracy ${report.accuracy.toFixed(2)} | precision ${report.precision.toFixed(2)} | ` +
    `recall ${report.recall.toFixed(2)} | F1 ${report.f1.toFixed(2)} | ` +
    `train ${report.n_train} / test ${report.n_test}${kappa}</p>`
  );
}
