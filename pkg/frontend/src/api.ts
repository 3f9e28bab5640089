import type {
  GenerateResponse,
  LectureDetail,
  LectureSummary,
  RunSummary,
  SavedQuizItem,
} from "./types";

export interface ApiClientOptions {
  /** Base URL without the /api/v1 prefix, e.g. "" for same-origin. */
  baseUrl?: string;
  /** Injectable fetch for tests and auth wrappers. */
  fetch?: typeof fetch;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
    /** Provider failures (502) are retryable from the UI. */
    public readonly retryable: boolean,
  ) {
    super(message);
  }
}

export interface ApiClient {
  listLectures(): Promise<LectureSummary[]>;
  getLecture(id: string): Promise<LectureDetail>;
  getQuiz(id: string): Promise<SavedQuizItem[]>;
  generate(req: {
    lecture_id: string;
    timestamp_s: number;
    answer: string;
    strategy: string;
  }): Promise<GenerateResponse>;
  saveQuestion(req: {
    lecture_id: string;
    timestamp_s: number;
    answer: string;
    question: string;
    distractors: string[];
  }): Promise<SavedQuizItem>;
  listRuns(): Promise<RunSummary[]>;
}

export function createApiClient(options: ApiClientOptions = {}): ApiClient {
  const baseUrl = options.baseUrl ?? "";
  const doFetch = options.fetch ?? fetch;

  async function request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await doFetch(`${baseUrl}/api/v1${path}`, {
      ...init,
      headers: { "Content-Type": "application/json", ...init?.headers },
    });
    if (!response.ok) {
      const body = await response
        .json()
        .catch(() => ({ detail: response.statusText }));
      throw new ApiError(
        typeof body.detail === "string" ? body.detail : "request failed",
        response.status,
        response.status === 502,
      );
    }
    return response.json() as Promise<T>;
  }

  return {
    listLectures: () => request<LectureSummary[]>("/lectures"),
    getLecture: (id) => request<LectureDetail>(`/lectures/${id}`),
    getQuiz: (id) => request<SavedQuizItem[]>(`/lectures/${id}/quiz`),
    generate: (req) =>
      request<GenerateResponse>("/generate", {
        method: "POST",
        body: JSON.stringify(req),
      }),
    saveQuestion: async (req) => {
      const data = await request<{ saved: SavedQuizItem }>("/save-question", {
        method: "POST",
        body: JSON.stringify(req),
      });
      return data.saved;
    },
    listRuns: () => request<RunSummary[]>("/runs"),
  };
}
