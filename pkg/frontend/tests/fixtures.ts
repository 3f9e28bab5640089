import type { ApiClient } from "../src/api";
import type {
  Candidate,
  GenerateResponse,
  LectureDetail,
  SavedQuizItem,
} from "../src/types";

export const LECTURE: LectureDetail = {
  id: "lec1",
  course: "test-course",
  duration_s: 100,
  segments: [
    { index: 1, start_s: 0, end_s: 10, text: "welcome to the lecture" },
    { index: 2, start_s: 10, end_s: 20, text: "activation functions today" },
    { index: 3, start_s: 20, end_s: 30, text: "a common activation is relu" },
    { index: 4, start_s: 30, end_s: 40, text: "negative values become zero" },
    { index: 5, start_s: 40, end_s: 50, text: "next we cover pooling" },
  ],
  keyframes: [
    { index: 1, timestamp_s: 0, image_ref: "frames/0.png", caption: "Title slide" },
    { index: 2, timestamp_s: 30, image_ref: "frames/30.png", caption: "" },
  ],
  alignment: { "1": [1, 2, 3], "2": [4, 5] },
};

export function makeCandidates(answer: string): Candidate[] {
  return [1, 2, 3].map((ordinal) => ({
    ordinal,
    stem: `What does the lecturer call ${answer}?`,
    options: [
      ["A", answer],
      ["B", "an unrelated concept"],
      ["C", "a distractor"],
    ],
    answer_letter: "A",
    interrogative: true,
  }));
}

export function makeGenerateResponse(answer: string): GenerateResponse {
  return {
    bundle: {
      strategy: "CoT+Rewrite(transcript)",
      selected_transcript: ["a common activation is relu"],
      selected_keyframe_text: [],
      contextual_summary: "the lecturer introduces activations",
      statements: [
        { text: `The lecture explains that ${answer} is central.`, contains_answer: true },
        { text: `A key point is ${answer}.`, contains_answer: true },
      ],
      reasoning: "",
      timestamp_id: 3,
    },
    candidates: makeCandidates(answer),
    rquge: [4.5, 4.0, 3.5],
    segment_index: 3,
  };
}

/** In-memory ApiClient with a quiz store, standing in for the service. */
export function makeMockApi(overrides: Partial<ApiClient> = {}): ApiClient & {
  savedQuiz: SavedQuizItem[];
} {
  const savedQuiz: SavedQuizItem[] = [];
  const api: ApiClient & { savedQuiz: SavedQuizItem[] } = {
    savedQuiz,
    listLectures: async () => [
      {
        id: LECTURE.id,
        course: LECTURE.course,
        duration_s: LECTURE.duration_s,
        n_segments: LECTURE.segments.length,
        n_keyframes: LECTURE.keyframes.length,
        n_quiz: savedQuiz.length,
      },
    ],
    getLecture: async () => LECTURE,
    getQuiz: async () => [...savedQuiz],
    generate: async (req) => makeGenerateResponse(req.answer),
    saveQuestion: async (req) => {
      const item: SavedQuizItem = {
        id: `${req.lecture_id}-q${savedQuiz.length + 1}`,
        timestamp_s: req.timestamp_s,
        segment_index: 0,
        answer: req.answer,
        reference_question: req.question,
        distractors: req.distractors,
        choice_count: 1 + req.distractors.length,
      };
      savedQuiz.push(item);
      return item;
    },
    listRuns: async () => [],
    ...overrides,
  };
  return api;
}
