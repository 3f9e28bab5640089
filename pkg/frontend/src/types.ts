/** Shapes mirrored from the /api/v1 JSON contract. */

export interface LectureSummary {
  id: string;
  course: string;
  duration_s: number;
  n_segments: number;
  n_keyframes: number;
  n_quiz: number;
}

export interface Segment {
  index: number;
  start_s: number;
  end_s: number;
  text: string;
}

export interface KeyframeInfo {
  index: number;
  timestamp_s: number;
  image_ref: string;
  caption: string;
}

export interface LectureDetail {
  id: string;
  course: string;
  duration_s: number;
  segments: Segment[];
  keyframes: KeyframeInfo[];
  alignment: Record<string, number[]>;
}

export interface KnowledgeStatement {
  text: string;
  contains_answer: boolean;
}

export interface ContextBundle {
  strategy: string;
  selected_transcript: string[];
  selected_keyframe_text: string[];
  contextual_summary: string;
  statements: KnowledgeStatement[];
  reasoning: string;
  timestamp_id: number | null;
}

export interface Candidate {
  ordinal: number;
  stem: string;
  options: [string, string][];
  answer_letter: string | null;
  interrogative: boolean;
}

export interface GenerateResponse {
  bundle: ContextBundle;
  candidates: Candidate[];
  rquge: number[] | null;
  segment_index: number;
}

export interface SavedQuizItem {
  id: string;
  timestamp_s: number;
  segment_index: number;
  answer: string;
  reference_question: string;
  distractors: string[];
  choice_count: number;
}

export interface RunSummary {
  name: string;
  report_csv: string;
}
