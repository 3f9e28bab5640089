import type { AuthoringSession, ReviewCandidate } from "./session";
import type { ContextBundle, LectureDetail } from "./types";

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Wrap case-insensitive occurrences of the answer in <mark> elements.
 * Plain text nodes elsewhere, so no HTML injection from model output.
 */
export function highlightAnswer(text: string, answer: string): HTMLElement {
  const host = el("span", "highlighted");
  const needle = answer.trim().toLowerCase();
  if (!needle) {
    host.textContent = text;
    return host;
  }
  let rest = text;
  let restLower = text.toLowerCase();
  let at = restLower.indexOf(needle);
  while (at >= 0) {
    if (at > 0) host.append(document.createTextNode(rest.slice(0, at)));
    const mark = document.createElement("mark");
    mark.textContent = rest.slice(at, at + needle.length);
    host.append(mark);
    rest = rest.slice(at + needle.length);
    restLower = restLower.slice(at + needle.length);
    at = restLower.indexOf(needle);
  }
  if (rest) host.append(document.createTextNode(rest));
  return host;
}

/** Transcript list plus keyframe strip; clicking a segment moves the cursor. */
export function renderTimeline(
  lecture: LectureDetail,
  session: AuthoringSession,
  onChange: () => void,
): HTMLElement {
  const root = el("div", "timeline");
  const activeKf = session.activeKeyframe();
  const strip = el("div", "keyframe-strip");
  for (const kf of lecture.keyframes) {
    const cell = el(
      "div",
      kf.index === activeKf ? "keyframe active" : "keyframe",
    );
    cell.title = kf.caption || "(no caption)";
    cell.append(el("span", "keyframe-time", `${kf.timestamp_s}s`));
    cell.append(el("span", "keyframe-caption", kf.caption || "(no caption)"));
    strip.append(cell);
  }
  root.append(strip);

  const list = el("ol", "segments");
  const cursorSegment = session.cursorSegment();
  for (const seg of lecture.segments) {
    const item = el(
      "li",
      seg.index === cursorSegment ? "segment cursor" : "segment",
    );
    item.dataset.index = String(seg.index);
    item.append(el("span", "segment-time", `${seg.start_s}s`));
    item.append(el("span", "segment-text", seg.text));
    item.addEventListener("click", () => {
      session.setCursor(seg.start_s);
      onChange();
    });
    list.append(item);
  }
  root.append(list);
  return root;
}

/** Expandable view of the context that produced the candidates. */
export function renderBundle(
  bundle: ContextBundle,
  answer: string,
): HTMLElement {
  const root = el("details", "bundle");
  root.append(el("summary", "bundle-summary", `Context: ${bundle.strategy}`));
  if (bundle.contextual_summary) {
    root.append(el("p", "bundle-overview", bundle.contextual_summary));
  }
  for (const excerpt of [
    ...bundle.selected_transcript,
    ...bundle.selected_keyframe_text,
  ]) {
    root.append(el("blockquote", "excerpt", excerpt));
  }
  for (const statement of bundle.statements) {
    const row = el("p", "statement");
    row.append(highlightAnswer(statement.text, answer));
    root.append(row);
  }
  return root;
}

export function renderCandidate(
  review: ReviewCandidate,
  answer: string,
  actions: {
    onAccept: (ordinal: number) => void;
    onEdit: (ordinal: number, stem: string) => void;
  },
): HTMLElement {
  const { candidate } = review;
  const card = el("article", `candidate ${review.state}`);
  card.dataset.ordinal = String(candidate.ordinal);

  const stem = el("div", "stem");
  const stemInput = document.createElement("input");
  stemInput.className = "stem-input";
  stemInput.value = review.editedStem;
  stemInput.addEventListener("input", () =>
    actions.onEdit(candidate.ordinal, stemInput.value),
  );
  stem.append(stemInput);
  card.append(stem);

  const options = el("ul", "options");
  for (const [label, text] of candidate.options) {
    const row = el("li", label === candidate.answer_letter ? "option correct" : "option");
    row.append(el("span", "option-label", `${label})`));
    row.append(highlightAnswer(text, answer));
    options.append(row);
  }
  card.append(options);

  if (review.rquge !== null) {
    card.append(el("span", "score", `RQUGE ${review.rquge.toFixed(2)}`));
  }
  const accept = el("button", "accept", review.state === "accepted" ? "Accepted" : "Accept") as HTMLButtonElement;
  accept.disabled = review.state === "accepted";
  accept.addEventListener("click", () => actions.onAccept(candidate.ordinal));
  card.append(accept);
  return card;
}

export function renderCandidatePanel(
  session: AuthoringSession,
  onChange: () => void,
): HTMLElement {
  const root = el("section", "candidates");
  if (session.lastError) {
    const error = el("div", "error", session.lastError);
    const retry = el("button", "retry", "Retry") as HTMLButtonElement;
    retry.addEventListener("click", () => {
      void session.generate().then(onChange);
    });
    error.append(retry);
    root.append(error);
  }
  if (session.bundle) {
    root.append(renderBundle(session.bundle, session.draftAnswer));
  }
  for (const review of session.candidates) {
    root.append(
      renderCandidate(review, session.draftAnswer, {
        onAccept: (ordinal) => {
          session.accept(ordinal);
          onChange();
        },
        onEdit: (ordinal, stem) => session.editStem(ordinal, stem),
      }),
    );
  }
  return root;
}

export function renderBasket(
  session: AuthoringSession,
  onChange: () => void,
): HTMLElement {
  const root = el("aside", "basket");
  root.append(el("h2", "basket-title", `Export basket (${session.basket.length})`));
  const list = el("ul", "basket-entries");
  for (const entry of session.basket) {
    list.append(el("li", `basket-entry ${entry.saveState}`, `${entry.question} [${entry.saveState}]`));
  }
  root.append(list);

  const save = el("button", "save-all", "Save to corpus") as HTMLButtonElement;
  save.disabled = session.basket.length === 0;
  save.addEventListener("click", () => {
    void session.saveBasket().then(onChange);
  });
  root.append(save);

  const download = el("button", "download", "Download quiz.jsonl") as HTMLButtonElement;
  download.disabled = session.basket.length === 0;
  root.append(download);
  return root;
}
