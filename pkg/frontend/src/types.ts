// Wire types for the annotation HTTP API.

export interface Roster {
  classroom_id: string;
  students: string[];
}

export interface CropInfo {
  crop_id: string;
  frame_index: number;
  timestamp_us: number;
  box: [number, number, number, number];
  score: number;
}

export interface Progress {
  target: number;
  per_student: Record<string, number>;
  complete: string[];
}

export interface LabelResponse {
  ok: boolean;
  progress: Progress;
}

export interface GazeDot {
  x: number;
  y: number;
}

export interface TruthFrameFace {
  crop_id: string;
  box: [number, number, number, number];
}

export interface TruthFrame {
  frame_index: number;
  timestamp_us: number;
  gaze: GazeDot | null;
  faces: TruthFrameFace[];
}

export interface ConfusionJson {
  class_set: string[];
  counts: number[][];
}

export interface PerClassMetrics {
  precision: number;
  recall: number;
  f1: number;
  support: number;
}

export interface ReportJson {
  format: string;
  version: number;
  classroom_id: string;
  classifier: string;
  embeddings: string;
  accuracy: number;
  precision: number;
  recall: number;
  f1: number;
  confusion: ConfusionJson;
  per_class: Record<string, PerClassMetrics>;
  n_train: number;
  n_test: number;
  frames: [number, string, string][];
  kappa?: number;
}

export const TRUTH_NONE = "none";
