// Thin typed client for the annotation API; the only network code in the UI.

import type { CropInfo, LabelResponse, Progress, ReportJson, Roster, TruthFrame } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export interface CropQuery {
  minute?: number;
  unlabeled?: boolean;
  annotator?: string;
  suggest?: number;
  seed?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        // plain-text error body
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  getRoster(): Promise<Roster> {
    return this.request<Roster>("/api/roster");
  }

  getCrops(query: CropQuery = {}): Promise<CropInfo[]> {
    const params = new URLSearchParams();
    if (query.minute !== undefined) params.set("minute", String(query.minute));
    if (query.unlabeled) params.set("unlabeled", "true");
    if (query.annotator) params.set("annotator", query.annotator);
    if (query.suggest !== undefined) params.set("suggest", String(query.suggest));
    if (query.seed !== undefined) params.set("seed", String(query.seed));
    const suffix = params.size ? `?${params.toString()}` : "";
    return this.request<CropInfo[]>(`/api/crops${suffix}`);
  }

  cropImageUrl(cropId: string): string {
    return `${this.baseUrl}/api/crops/${cropId}/image`;
  }

  postLabel(cropId: string, studentId: string, annotatorId: string): Promise<LabelResponse> {
    return this.request<LabelResponse>("/api/labels", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ crop_id: cropId, student_id: studentId, annotator_id: annotatorId }),
    });
  }

  getProgress(): Promise<Progress> {
    return this.request<Progress>("/api/progress");
  }

  getTruthFrames(minute?: number): Promise<TruthFrame[]> {
    const suffix = minute === undefined ? "" : `?minute=${minute}`;
    return this.request<TruthFrame[]>(`/api/truth-frames${suffix}`);
  }

  postTruth(frameIndex: number, studentId: string, annotatorId: string): Promise<{ ok: boolean }> {
    return this.request<{ ok: boolean }>("/api/truth", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ frame_index: frameIndex, student_id: studentId, annotator_id: annotatorId }),
    });
  }

  getReport(): Promise<ReportJson> {
    return this.request<ReportJson>("/api/report");
  }
}
