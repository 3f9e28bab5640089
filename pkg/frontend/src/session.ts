import type { ApiClient } from "./api";
import type {
  Candidate,
  GenerateResponse,
  LectureDetail,
  SavedQuizItem,
} from "./types";

export type CandidateState = "proposed" | "accepted";
export type SaveState = "draft" | "saving" | "saved" | "failed";

export interface ReviewCandidate {
  candidate: Candidate;
  /** Editable copy of the stem; starts equal to candidate.stem. */
  editedStem: string;
  rquge: number | null;
  state: CandidateState;
}

export interface BasketEntry {
  /** Provisional until the server assigns the real quiz id. */
  id: string;
  question: string;
  answer: string;
  timestamp_s: number;
  distractors: string[];
  saveState: SaveState;
}

/**
 * Single-tab authoring state. Everything here is a pure function of server
 * data plus local edits, so a reload followed by the same API reads
 * reconstructs the same view (minus unsent drafts).
 */
export class AuthoringSession {
  cursorS = 0;
  draftAnswer = "";
  strategy = "CoT+Rewrite(transcript)";
  candidates: ReviewCandidate[] = [];
  bundle: GenerateResponse["bundle"] | null = null;
  basket: BasketEntry[] = [];
  lastError = "";
  private provisionalCounter = 0;

  constructor(
    public readonly lecture: LectureDetail,
    private readonly api: ApiClient,
  ) {}

  /** Clamp into [0, duration]; clicking a segment passes its start_s. */
  setCursor(timestampS: number): void {
    this.cursorS = Math.min(Math.max(timestampS, 0), this.lecture.duration_s);
  }

  /** Segment whose time span contains the cursor (ties go to the earlier one). */
  cursorSegment(): number {
    let found = this.lecture.segments[0]?.index ?? 0;
    for (const seg of this.lecture.segments) {
      if (seg.start_s <= this.cursorS && this.cursorS <= seg.end_s) {
        found = seg.index;
        break;
      }
    }
    return found;
  }

  /** Keyframe owning the cursor segment, per the alignment map. */
  activeKeyframe(): number | null {
    const segment = this.cursorSegment();
    for (const [kf, segments] of Object.entries(this.lecture.alignment)) {
      if (segments.includes(segment)) return Number(kf);
    }
    return null;
  }

  async generate(): Promise<void> {
    const answer = this.draftAnswer.trim();
    if (!answer) {
      this.lastError = "enter an answer before generating";
      return;
    }
    this.lastError = "";
    try {
      const response = await this.api.generate({
        lecture_id: this.lecture.id,
        timestamp_s: this.cursorS,
        answer,
        strategy: this.strategy,
      });
      this.bundle = response.bundle;
      this.candidates = response.candidates.map((candidate, i) => ({
        candidate,
        editedStem: candidate.stem,
        rquge: response.rquge ? (response.rquge[i] ?? null) : null,
        state: "proposed",
      }));
    } catch (err) {
      this.candidates = [];
      this.bundle = null;
      this.lastError = err instanceof Error ? err.message : String(err);
    }
  }

  editStem(ordinal: number, stem: string): void {
    const entry = this.candidates.find((c) => c.candidate.ordinal === ordinal);
    if (entry) entry.editedStem = stem;
  }

  /**
   * Move a candidate into the export basket. Refused (returns false) when
   * the answer is empty or the candidate has fewer than two options.
   */
  accept(ordinal: number): boolean {
    const entry = this.candidates.find((c) => c.candidate.ordinal === ordinal);
    const answer = this.draftAnswer.trim();
    if (!entry || entry.state === "accepted") return false;
    if (!answer || entry.candidate.options.length < 2) return false;
    entry.state = "accepted";
    this.provisionalCounter += 1;
    this.basket.push({
      id: `draft-${this.provisionalCounter}`,
      question: entry.editedStem.trim(),
      answer,
      timestamp_s: this.cursorS,
      distractors: entry.candidate.options
        .map(([, text]) => text)
        .filter((text) => text.toLowerCase() !== answer.toLowerCase()),
      saveState: "draft",
    });
    return true;
  }

  /** quiz.jsonl-compatible download content; empty basket yields "". */
  exportJsonl(): string {
    if (this.basket.length === 0) return "";
    return (
      this.basket
        .map((entry) =>
          JSON.stringify({
            id: entry.id,
            timestamp_s: entry.timestamp_s,
            answer: entry.answer,
            reference_question: entry.question,
            distractors: entry.distractors,
            choice_count: 1 + entry.distractors.length,
          }),
        )
        .join("\n") + "\n"
    );
  }

  /**
   * Save every draft basket entry. Optimistic: entries flip to "saving"
   * immediately; on success the server id replaces the provisional one,
   * on failure the entry rolls back to "failed" and stays editable.
   */
  async saveBasket(): Promise<SavedQuizItem[]> {
    const saved: SavedQuizItem[] = [];
    for (const entry of this.basket) {
      if (entry.saveState === "saved" || entry.saveState === "saving") continue;
      entry.saveState = "saving";
      try {
        const item = await this.api.saveQuestion({
          lecture_id: this.lecture.id,
          timestamp_s: entry.timestamp_s,
          answer: entry.answer,
          question: entry.question,
          distractors: entry.distractors,
        });
        entry.id = item.id;
        entry.saveState = "saved";
        saved.push(item);
      } catch {
        entry.saveState = "failed";
      }
    }
    return saved;
  }
}
