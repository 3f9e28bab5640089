import { createApiClient } from "./api";
import { renderBasket, renderCandidatePanel, renderTimeline } from "./render";
import { AuthoringSession } from "./session";

const STRATEGIES = [
  "CoT+Rewrite(transcript)",
  "CoT(transcript)",
  "Direct(transcript)",
  "Rule-5(transcript)",
  "All(transcript)",
  "CombineMM+Rewrite(both)",
];

async function boot(): Promise<void> {
  const api = createApiClient();
  const app = document.getElementById("app");
  if (!app) return;

  const lectures = await api.listLectures();
  if (lectures.length === 0) {
    app.textContent = "No lectures in the corpus.";
    return;
  }
  const lecture = await api.getLecture(lectures[0].id);
  const session = new AuthoringSession(lecture, api);

  function redraw(): void {
    if (!app) return;
    app.replaceChildren();

    const controls = document.createElement("div");
    controls.className = "controls";

    const answer = document.createElement("input");
    answer.placeholder = "Answer span";
    answer.value = session.draftAnswer;
    answer.addEventListener("input", () => {
      session.draftAnswer = answer.value;
    });
    controls.append(answer);

    const strategy = document.createElement("select");
    for (const label of STRATEGIES) {
      const option = document.createElement("option");
      option.value = label;
      option.textContent = label;
      option.selected = label === session.strategy;
      strategy.append(option);
    }
    strategy.addEventListener("change", () => {
      session.strategy = strategy.value;
      // switching strategy re-generates for the current answer
      if (session.draftAnswer.trim()) void session.generate().then(redraw);
    });
    controls.append(strategy);

    const generate = document.createElement("button");
    generate.textContent = "Generate";
    generate.addEventListener("click", () => {
      void session.generate().then(redraw);
    });
    controls.append(generate);

    app.append(controls);
    app.append(renderTimeline(lecture, session, redraw));
    app.append(renderCandidatePanel(session, redraw));
    const basket = renderBasket(session, redraw);
    const download = basket.querySelector<HTMLButtonElement>(".download");
    download?.addEventListener("click", () => {
      const blob = new Blob([session.exportJsonl()], {
        type: "application/jsonl",
      });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${lecture.id}-quiz.jsonl`;
      link.click();
      URL.revokeObjectURL(link.href);
    });
    app.append(basket);
  }

  redraw();
}

void boot();
