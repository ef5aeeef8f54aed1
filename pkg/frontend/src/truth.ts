// Ground-truth coding flow: step through gaze-overlaid frames and record
// which student the teacher attends, or "none" when no gaze is usable.

import { AnnotationApi, ApiError } from "./api.js";
import { assignHotkeys } from "./hotkeys.js";
import { TRUTH_NONE, type TruthFrame } from "./types.js";

export class TruthController {
  roster: string[] = [];
  frames: TruthFrame[] = [];
  cursor = 0;
  hotkeys = new Map<string, string>();
  lastError: string | null = null;
  /** local echo of submissions this session, keyed by frame index */
  coded = new Map<number, string>();

  constructor(
    private readonly api: AnnotationApi,
    readonly annotatorId: string,
    private readonly minute = 2,
  ) {}

  async start(): Promise<void> {
    const roster = await this.api.getRoster();
    this.roster = roster.students;
    this.hotkeys = assignHotkeys(this.roster, ["n", "p", "x"]);
    this.frames = await this.api.getTruthFrames(this.minute);
    this.cursor = 0;
  }

  current(): TruthFrame | null {
    return this.frames[this.cursor] ?? null;
  }

  next(): void {
    if (this.cursor < this.frames.length - 1) this.cursor += 1;
  }

  prev(): void {
    if (this.cursor > 0) this.cursor -= 1;
  }

  async annotate(student: string): Promise<boolean> {
    const frame = this.current();
    if (frame === null) return false;
    this.lastError = null;
    try {
      await this.api.postTruth(frame.frame_index, student, this.annotatorId);
      this.coded.set(frame.frame_index, student);
      this.next();
      return true;
    } catch (err) {
      this.lastError = err instanceof ApiError ? err.message : String(err);
      return false;
    }
  }

  async handleKey(key: string): Promise<void> {
    if (key === "n" || key === "ArrowRight") {
      this.next();
      return;
    }
    if (key === "p" || key === "ArrowLeft") {
      this.prev();
      return;
    }
    if (key === "x" || key === "0") {
      await this.annotate(TRUTH_NONE);
      return;
    }
    const student = this.hotkeys.get(key);
    if (student !== undefined) await this.annotate(student);
  }
}

/** SVG overlay of face boxes and the gaze dot, in frame coordinates. */
export function renderFrameOverlay(frame: TruthFrame, width = 1920, height = 1080): string {
  const boxes = frame.faces
    .map(
      (face) =>
        `<rect x="${face.box[0]}" y="${face.box[1]}" width="${face.box[2] - face.box[0]}" ` +
        `height="${face.box[3] - face.box[1]}" class="face-box" data-crop="${face.crop_id}"/>`,
    )
    .join("");
  const gaze =
    frame.gaze === null
      ? ""
      : `<circle cx="${frame.gaze.x}" cy="${frame.gaze.y}" r="12" class="gaze-dot"/>`;
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="frame-overlay" ` +
    `data-frame="${frame.frame_index}">${boxes}${gaze}</svg>`
  );
}
