// Scripted annotation session against a live annotation server.
//
// Drives the same controller code the browser runs, over real HTTP: label
// 30 crops for each of 2 synthetic students, verify the server's labels
// file and progress endpoint, double-code a stretch of ground-truth
// frames as two raters, and check the kappa the evaluate command reports
// against the hand-computed value for the planted disagreement pattern.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { LabelingController } from "../src/labeling.js";
import { renderConfusionHeatmap } from "../src/review.js";
import { TruthController } from "../src/truth.js";
import type { ReportJson } from "../src/types.js";

const PY = process.env.PYTHON ?? "python3";
const TIMEOUT = 240_000;

function cli(args: string[]): void {
  const result = spawnSync(PY, ["-m", "classgaze.cli", ...args], { encoding: "utf-8" });
  if (result.status !== 0) {
    throw new Error(`classgaze ${args.join(" ")} failed:\n${result.stdout}\n${result.stderr}`);
  }
}

let sessionDir: string;
let server: ChildProcess;
let base: string;
let api: AnnotationApi;

async function waitForServer(url: string, ms: number): Promise<void> {
  const deadline = Date.now() + ms;
  for (;;) {
    try {
      const response = await fetch(url + "/api/roster");
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("annotation server did not come up");
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

beforeAll(async () => {
  sessionDir = join(mkdtempSync(join(tmpdir(), "classgaze-ui-")), "sess");
  // 1800 frames = 72 s of video: minute 1 for crop labels, minute 2 for truth
  cli(["synth", "--out", sessionDir, "--students", "2", "--frames", "1800", "--seed", "6"]);
  cli(["detect", "--config", join(sessionDir, "session.toml")]);

  const port = 18000 + Math.floor(Math.random() * 20000);
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    PY,
    ["-m", "classgaze.cli", "annotate-serve", "--config", join(sessionDir, "session.toml"),
     "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForServer(base, 30_000);
  api = new AnnotationApi(base);
}, TIMEOUT);

afterAll(() => {
  server?.kill();
});

describe("scripted annotation session", () => {
  it(
    "labels 30 crops per student; progress reports 30/30; labels file obeys the schema",
    async () => {
      const crops_truth = new Map<string, string>(
        readFileSync(join(sessionDir, "crops_truth.csv"), "utf-8")
          .trim()
          .split("\n")
          .slice(1)
          .map((line) => line.split(",") as [string, string]),
      );

      const controller = new LabelingController(api, "ui");
      await controller.start();
      expect(controller.roster).toEqual(["S01", "S02"]);

      while (!controller.roster.every((s) => controller.isComplete(s))) {
        const crop = controller.current();
        expect(crop).not.toBeNull();
        const student = crops_truth.get(crop!.crop_id)!;
        if (controller.isComplete(student)) {
          controller.skip();
          continue;
        }
        expect(await controller.labelCurrent(student)).toBe(true);
        expect(controller.lastError).toBeNull();
      }

      // server-side progress is the displayed truth
      const progress = await api.getProgress();
      expect(progress.target).toBe(30);
      expect(progress.per_student).toEqual({ S01: 30, S02: 30 });
      expect(new Set(progress.complete)).toEqual(new Set(["S01", "S02"]));
      expect(controller.progressRows().every((row) => row.complete)).toBe(true);

      // labels file validates against the CSV schema
      const lines = readFileSync(join(sessionDir, "labels.csv"), "utf-8").trim().split("\n");
      expect(lines[0]).toBe("crop_id,frame_index,x1,y1,x2,y2,student_id,annotator_id,ts");
      expect(lines.length).toBe(1 + 60);
      for (const line of lines.slice(1)) {
        const parts = line.split(",");
        expect(parts).toHaveLength(9);
        expect(parts[0]).toMatch(/^c\d{6}$/);
        expect(Number.isInteger(Number(parts[1]))).toBe(true);
        for (const coord of parts.slice(2, 6)) expect(Number.isFinite(Number(coord))).toBe(true);
        expect(["S01", "S02"]).toContain(parts[6]);
        expect(parts[7]).toBe("ui");
        expect(Number.isFinite(Number(parts[8]))).toBe(true);
      }
    },
    TIMEOUT,
  );

  it(
    "double-coded truth yields the hand-checked kappa through the evaluate command",
    async () => {
      // rater 1: S01 on even frames, S02 on odd, for 20 minute-two frames
      const r1 = new TruthController(api, "r1");
      await r1.start();
      expect(r1.current()?.frame_index).toBe(1500);
      for (let i = 0; i < 20; i++) {
        const frame = r1.current()!.frame_index;
        await r1.annotate(frame % 2 === 0 ? "S01" : "S02");
      }
      // rater 2 agrees except on frames 1500 and 1502 (18/20 agreement)
      const r2 = new TruthController(api, "r2");
      await r2.start();
      for (let i = 0; i < 20; i++) {
        const frame = r2.current()!.frame_index;
        let student = frame % 2 === 0 ? "S01" : "S02";
        if (frame === 1500 || frame === 1502) student = "S02";
        await r2.annotate(student);
      }

      // hand check: p_o = 18/20; marginals r1 (10,10)/20, r2 (8,12)/20
      // p_e = 0.5*0.4 + 0.5*0.6 = 0.5; kappa = (0.9 - 0.5)/(1 - 0.5) = 0.8
      for (const rater of ["r1", "r2"]) {
        const text = await (await fetch(`${base}/api/truth.csv?annotator=${rater}`)).text();
        const { writeFileSync } = await import("node:fs");
        writeFileSync(join(sessionDir, `truth_${rater}.csv`), text);
      }
      cli(["train", "--config", join(sessionDir, "session.toml"), "--family", "knn"]);
      cli(["map", "--config", join(sessionDir, "session.toml"), "--family", "knn"]);
      cli([
        "evaluate",
        "--pred", join(sessionDir, "attention.jsonl"),
        "--truth", join(sessionDir, "truth_r1.csv"),
        "--truth2", join(sessionDir, "truth_r2.csv"),
        "--out", join(sessionDir, "reports", "report.json"),
      ]);
      const report = JSON.parse(
        readFileSync(join(sessionDir, "reports", "report.json"), "utf-8"),
      ) as ReportJson;
      expect(report.kappa).toBeDefined();
      expect(Math.abs(report.kappa! - 0.8)).toBeLessThan(1e-9);
    },
    TIMEOUT,
  );

  it(
    "review heatmap over the live report matches its JSON cell for cell",
    async () => {
      const report = await api.getReport();
      const html = renderConfusionHeatmap(report);
      report.confusion.class_set.forEach((trueCls, i) => {
        report.confusion.class_set.forEach((predCls, j) => {
          const cell = `data-true="${trueCls}" data-pred="${predCls}" data-count="${report.confusion.counts[i]![j]!}"`;
          expect(html).toContain(cell);
        });
      });
    },
    TIMEOUT,
  );
});
