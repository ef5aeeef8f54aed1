// Crop-labeling flow: walk the minute-one queue, one keystroke per crop.
//
// Progress is optimistic while a submission is in flight and always
// reconciled to the server's response; the server stays the single source
// of truth.  A failed submission keeps the queue position and surfaces the
// error instead of dropping the label.

import { AnnotationApi, ApiError } from "./api.js";
import { assignHotkeys } from "./hotkeys.js";
import type { CropInfo } from "./types.js";

export class LabelingController {
  roster: string[] = [];
  target = 30;
  queue: CropInfo[] = [];
  cursor = 0;
  hotkeys = new Map<string, string>();
  lastError: string | null = null;
  busy = false;

  private confirmed: Record<string, number> = {};
  private pending: Record<string, number> = {};
  private completeSet = new Set<string>();

  constructor(
    private readonly api: AnnotationApi,
    readonly annotatorId: string,
    private readonly minute = 1,
  ) {}

  async start(): Promise<void> {
    const roster = await this.api.getRoster();
    this.roster = roster.students;
    this.hotkeys = assignHotkeys(this.roster, ["n", "p", "x"]);
    await this.refresh();
  }

  /** Re-sync queue and progress from the server (page refresh equivalent). */
  async refresh(): Promise<void> {
    const progress = await this.api.getProgress();
    this.target = progress.target;
    this.confirmed = { ...progress.per_student };
    this.completeSet = new Set(progress.complete);
    this.pending = {};
    this.queue = await this.api.getCrops({
      minute: this.minute,
      unlabeled: true,
      annotator: this.annotatorId,
    });
    this.cursor = 0;
  }

  current(): CropInfo | null {
    return this.queue[this.cursor] ?? null;
  }

  skip(): void {
    if (this.cursor < this.queue.length) this.cursor += 1;
  }

  back(): void {
    if (this.cursor > 0) this.cursor -= 1;
  }

  countFor(student: string): number {
    return (this.confirmed[student] ?? 0) + (this.pending[student] ?? 0);
  }

  isComplete(student: string): boolean {
    return this.completeSet.has(student) || this.countFor(student) >= this.target;
  }

  async labelCurrent(student: string): Promise<boolean> {
    const crop = this.current();
    if (crop === null || this.busy) return false;
    if (!this.roster.includes(student)) {
      this.lastError = `unknown student ${student}`;
      return false;
    }
    this.busy = true;
    this.lastError = null;
    this.pending[student] = (this.pending[student] ?? 0) + 1; // optimistic
    try {
      const response = await this.api.postLabel(crop.crop_id, student, this.annotatorId);
      this.confirmed = { ...response.progress.per_student }; // reconcile
      this.completeSet = new Set(response.progress.complete);
      this.target = response.progress.target;
      delete this.pending[student];
      this.cursor += 1;
      return true;
    } catch (err) {
      // roll back the optimistic bump; queue position is unchanged
      this.pending[student] = (this.pending[student] ?? 1) - 1;
      if (!this.pending[student]) delete this.pending[student];
      this.lastError = err instanceof ApiError ? err.message : String(err);
      return false;
    } finally {
      this.busy = false;
    }
  }

  async handleKey(key: string): Promise<void> {
    if (key === "n" || key === "ArrowRight") {
      this.skip();
      return;
    }
    if (key === "p" || key === "ArrowLeft") {
      this.back();
      return;
    }
    const student = this.hotkeys.get(key);
    if (student !== undefined) await this.labelCurrent(student);
  }

  remaining(): number {
    return Math.max(0, this.queue.length - this.cursor);
  }

  progressRows(): { student: string; count: number; target: number; complete: boolean }[] {
    return this.roster.map((student) => ({
      student,
      count: this.countFor(student),
      target: this.target,
      complete: this.isComplete(student),
    }));
  }
}

export function renderProgress(rows: ReturnType<LabelingController["progressRows"]>): string {
  const items = rows
    .map((row) => {
      const cls = row.complete ? "progress-row complete" : "progress-row";
      const badge = row.complete ? " ✓" : "";
      return `<li class="${cls}" data-student="${row.student}">` +
        `${row.student}: ${row.count}/${row.target}${badge}</li>`;
    })
    .join("");
  return `<ul class="progress">${items}</ul>`;
}
