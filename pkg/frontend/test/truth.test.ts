import { describe, expect, it } from "vitest";

import { ApiError, type AnnotationApi } from "../src/api.js";
import { TruthController, renderFrameOverlay } from "../src/truth.js";
import type { TruthFrame } from "../src/types.js";

function frame(index: number, gaze: { x: number; y: number } | null): TruthFrame {
  return {
    frame_index: index,
    timestamp_us: index * 40_000,
    gaze,
    faces: [
      { crop_id: `c${index}a`, box: [100, 100, 170, 190] },
      { crop_id: `c${index}b`, box: [400, 120, 470, 210] },
    ],
  };
}

function mockApi(frames: TruthFrame[], failWith?: ApiError) {
  const posts: { frame: number; student: string; annotator: string }[] = [];
  const api = {
    getRoster: async () => ({ classroom_id: "c1", students: ["S01", "S02"] }),
    getTruthFrames: async () => frames,
    postTruth: async (frameIndex: number, student: string, annotator: string) => {
      if (failWith) throw failWith;
      posts.push({ frame: frameIndex, student, annotator });
      return { ok: true };
    },
  };
  return { api: api as unknown as AnnotationApi, posts };
}

describe("TruthController", () => {
  it("steps through frames with bounds", async () => {
    const { api } = mockApi([frame(0, { x: 1, y: 2 }), frame(1, null)]);
    const controller = new TruthController(api, "r1");
    await controller.start();
    expect(controller.current()?.frame_index).toBe(0);
    controller.prev();
    expect(controller.current()?.frame_index).toBe(0);
    controller.next();
    expect(controller.current()?.frame_index).toBe(1);
    controller.next();
    expect(controller.current()?.frame_index).toBe(1);
  });

  it("annotates the current frame and advances", async () => {
    const { api, posts } = mockApi([frame(5, { x: 1, y: 2 }), frame(6, null)]);
    const controller = new TruthController(api, "r1");
    await controller.start();
    expect(await controller.annotate("S02")).toBe(true);
    expect(posts).toEqual([{ frame: 5, student: "S02", annotator: "r1" }]);
    expect(controller.coded.get(5)).toBe("S02");
    expect(controller.current()?.frame_index).toBe(6);
  });

  it("records a skip with the none option via the x hotkey", async () => {
    const { api, posts } = mockApi([frame(7, null)]);
    const controller = new TruthController(api, "r1");
    await controller.start();
    await controller.handleKey("x");
    expect(posts).toEqual([{ frame: 7, student: "none", annotator: "r1" }]);
  });

  it("maps student hotkeys and navigation keys", async () => {
    const { api, posts } = mockApi([frame(0, null), frame(1, null), frame(2, null)]);
    const controller = new TruthController(api, "r1");
    await controller.start();
    await controller.handleKey("1");
    await controller.handleKey("n");
    await controller.handleKey("2");
    expect(posts.map((p) => p.student)).toEqual(["S01", "S02"]);
    expect(posts.map((p) => p.frame)).toEqual([0, 2]);
  });

  it("keeps position and surfaces the error on failure", async () => {
    const { api } = mockApi([frame(0, null)], new ApiError(400, "frame_index 0 out of range"));
    const controller = new TruthController(api, "r1");
    await controller.start();
    expect(await controller.annotate("S01")).toBe(false);
    expect(controller.current()?.frame_index).toBe(0);
    expect(controller.lastError).toContain("out of range");
  });
});

describe("renderFrameOverlay", () => {
  it("draws one rect per face and the gaze dot", () => {
    const svg = renderFrameOverlay(frame(3, { x: 135, y: 145 }));
    expect(svg.match(/<rect /g)).toHaveLength(2);
    expect(svg).toContain('data-crop="c3a"');
    expect(svg).toContain('<circle cx="135" cy="145"');
    expect(svg).toContain('data-frame="3"');
  });

  it("omits the gaze dot when no gaze resolved", () => {
    const svg = renderFrameOverlay(frame(4, null));
    expect(svg).not.toContain("<circle");
  });
});
