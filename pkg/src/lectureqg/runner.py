"""Run executor: (item x strategy) matrix over a corpus, with resumable
on-disk artifacts and report generation, plus the context-window sweep.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import stubprov
from .context import (ContextBundle, ContextStrategy, DEFAULT_RULE_BEST_K,
                      RULE_SWEEP_KS, build_all_context, build_rule_context,
                      combine_multimodal, render_bundle_context,
                      rewrite_context, select_cot, select_direct)
from .corpus import Lecture, QuizItem, load_corpus
from .llmclient import ChatClient, ModelConfig
from .metrics import (ItemScores, NliClient, RqugeClient, ScoringUnavailable,
                      StubNliClient, StubRqugeClient, aggregate_report,
                      nli_score, report_csv, report_markdown, rouge_l_f1,
                      rquge_score, score_at_k, truncate_for_rquge)
from .qgen import GenerationError, QuestionSet, generate_questions

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    corpus_root: str
    output_dir: str
    strategies: list[str] = field(default_factory=lambda: ["CoT+Rewrite(transcript)"])
    generator: ModelConfig = field(default_factory=ModelConfig)
    provider: str = ""  # "scripted-stub" for offline runs, else HTTP
    nli_endpoint: str = ""  # URL, "stub:peak=K", or empty for unscored
    rquge_endpoint: str = ""  # URL, "stub:fixed=X", or empty for unscored
    rule_best_k: int = DEFAULT_RULE_BEST_K
    cache_dir: str = ""

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib

            data = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
        generator = ModelConfig(**data.pop("generator", {}))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(generator=generator, **data)


def build_generator_client(config: RunConfig) -> ChatClient:
    cache_dir = config.cache_dir or str(Path(config.output_dir) / "cache")
    provider = None
    if config.provider == "scripted-stub":
        provider = stubprov.scripted_provider
    elif config.provider:
        raise ValueError(f"unknown provider {config.provider!r}")
    return ChatClient(config.generator, cache_dir=cache_dir, provider=provider)


def build_nli_client(spec: str):
    if not spec:
        return None
    m = re.match(r"stub:peak=(\d+)$", spec)
    if m:
        return StubNliClient(stubprov.window_peak_nli(int(m.group(1))))
    if spec.startswith("stub:"):
        raise ValueError(f"unknown NLI stub spec {spec!r}")
    return NliClient(spec)


def build_rquge_client(spec: str):
    if not spec:
        return None
    m = re.match(r"stub:fixed=([\d.]+)$", spec)
    if m:
        return StubRqugeClient(stubprov.fixed_rquge(float(m.group(1))))
    if spec.startswith("stub:"):
        raise ValueError(f"unknown RQUGE stub spec {spec!r}")
    return RqugeClient(spec)


def build_bundle(lecture: Lecture, item: QuizItem, strategy: ContextStrategy,
                 client: ChatClient, rule_best_k: int) -> ContextBundle:
    if strategy.variant == "all":
        bundle = build_all_context(lecture, item, strategy.modality)
    elif strategy.variant == "rule":
        bundle = build_rule_context(lecture, item, strategy.k, strategy.modality)
    elif strategy.variant == "direct":
        bundle = select_direct(lecture, item, strategy.modality, client,
                               rule_best_k=rule_best_k)
    elif strategy.variant == "cot":
        bundle = select_cot(lecture, item, strategy.modality, client,
                            rule_best_k=rule_best_k)
    elif strategy.variant == "combine":
        t_bundle = select_cot(lecture, item, "transcript", client,
                              rule_best_k=rule_best_k)
        k_bundle = select_cot(lecture, item, "keyframes", client,
                              rule_best_k=rule_best_k)
        bundle = combine_multimodal(t_bundle, k_bundle)
    else:
        raise ValueError(f"unhandled variant {strategy.variant}")
    bundle.strategy = strategy
    if strategy.rewrite:
        bundle = rewrite_context(bundle, item, client)
    return bundle


def score_questions(
    lecture: Lecture,
    item: QuizItem,
    bundle: ContextBundle,
    qset: QuestionSet,
    nli_client=None,
    rquge_client=None,
) -> ItemScores:
    scores = ItemScores(item_id=item.id, strategy_label=bundle.strategy.label)
    stems = [c.stem for c in qset.candidates]
    scores.rouge_l = [rouge_l_f1(stem, item.reference_question)
                      for stem in stems]
    scores.rouge_l_at5 = score_at_k(scores.rouge_l)
    if nli_client is not None:
        try:
            scores.nli = [nli_score(stem, item.reference_question, nli_client)
                          for stem in stems]
            scores.nli_at5 = score_at_k(scores.nli)
        except ScoringUnavailable as exc:
            logger.warning("NLI unscored for %s: %s", item.id, exc)
            scores.nli = []
    if rquge_client is not None:
        kind = ("transcript" if bundle.strategy.variant == "all"
                and bundle.strategy.modality == "transcript" else "extracted")
        segment_text = lecture.segment_by_index(item.segment_index).text
        context = truncate_for_rquge(render_bundle_context(bundle), kind,
                                     segment_text=segment_text)
        try:
            scores.rquge = [rquge_score(context, stem, item.answer, rquge_client)
                            for stem in stems]
            scores.rquge_at5 = score_at_k(scores.rquge)
        except ScoringUnavailable as exc:
            logger.warning("RQUGE unscored for %s: %s", item.id, exc)
            scores.rquge = []
    return scores


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text)


def _artifact_path(output_dir: Path, item_id: str, label: str) -> Path:
    return output_dir / "artifacts" / f"{_slug(item_id)}__{_slug(label)}.json"


def _bundle_row(bundle: ContextBundle) -> dict:
    return {
        "strategy": bundle.strategy.label,
        "selected_transcript": bundle.selected_transcript,
        "selected_keyframe_text": bundle.selected_keyframe_text,
        "contextual_summary": bundle.contextual_summary,
        "statements": [{"text": s.text, "contains_answer": s.contains_answer}
                       for s in bundle.statements],
        "validation": dataclasses.asdict(bundle.validation),
        "reasoning": bundle.reasoning,
        "timestamp_id": bundle.timestamp_id,
    }


def _qset_row(qset: QuestionSet) -> dict:
    return {
        "item_id": qset.item_id,
        "strategy": qset.strategy_label,
        "candidates": [
            {"ordinal": c.ordinal, "stem": c.stem,
             "options": [list(o) for o in c.options],
             "answer_letter": c.answer_letter,
             "interrogative": c.interrogative}
            for c in qset.candidates
        ],
        "raw_response": qset.raw_response,
    }


def run(config: RunConfig) -> list[ItemScores]:
    """Execute the (item x strategy) matrix; resumable via on-disk artifacts."""
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "artifacts").mkdir(exist_ok=True)
    corpus = load_corpus(config.corpus_root)
    client = build_generator_client(config)
    nli_client = build_nli_client(config.nli_endpoint)
    rquge_client = build_rquge_client(config.rquge_endpoint)
    strategies = [ContextStrategy.parse(s) for s in config.strategies]
    all_scores: list[ItemScores] = []
    for lecture, items in corpus:
        for item in items:
            for strategy in strategies:
                path = _artifact_path(output_dir, item.id, strategy.label)
                if path.exists():
                    row = json.loads(path.read_text(encoding="utf-8"))
                    all_scores.append(_scores_from_row(row["scores"]))
                    continue
                try:
                    bundle = build_bundle(lecture, item, strategy, client,
                                          config.rule_best_k)
                    qset = generate_questions(bundle, item, client)
                except GenerationError as exc:
                    logger.warning("generation failed: %s", exc)
                    continue
                scores = score_questions(lecture, item, bundle, qset,
                                         nli_client, rquge_client)
                row = {
                    "item_id": item.id,
                    "lecture_id": lecture.id,
                    "strategy": strategy.label,
                    "bundle": _bundle_row(bundle),
                    "questions": _qset_row(qset),
                    "scores": dataclasses.asdict(scores),
                }
                path.parent.mkdir(exist_ok=True)
                tmp = path.with_suffix(".tmp")
                tmp.write_text(json.dumps(row, ensure_ascii=False, indent=2),
                               encoding="utf-8")
                tmp.replace(path)
                all_scores.append(scores)
    all_scores.sort(key=lambda s: (s.strategy_label, s.item_id))
    rows = aggregate_report(all_scores)
    (output_dir / "report.csv").write_text(report_csv(rows), encoding="utf-8")
    (output_dir / "report.md").write_text(report_markdown(rows),
                                          encoding="utf-8")
    _write_jsonl(output_dir / "scores.jsonl",
                 [dataclasses.asdict(s) for s in all_scores])
    return all_scores


def _scores_from_row(row: dict) -> ItemScores:
    return ItemScores(**row)


def _write_jsonl(path: Path, rows: list[dict]):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


@dataclass
class SweepPoint:
    k: int
    mean_nli_at5: Optional[float]
    n_items: int


def sweep_window(config: RunConfig, ks: tuple[int, ...] = RULE_SWEEP_KS,
                 modality: str = "transcript") -> tuple[list[SweepPoint], int]:
    """Run Rule-k for each k and report mean NLI@5 per window size.

    Returns the points and the argmax k (operational Rule-Best).
    """
    points = []
    for k in ks:
        sub = dataclasses.replace(
            config,
            strategies=[f"rule-{k}({modality})"],
            output_dir=str(Path(config.output_dir) / f"sweep_k{k}"),
        )
        scores = run(sub)
        vals = [s.nli_at5 for s in scores if s.nli_at5 is not None]
        points.append(SweepPoint(
            k=k,
            mean_nli_at5=sum(vals) / len(vals) if vals else None,
            n_items=len(scores),
        ))
    scored = [p for p in points if p.mean_nli_at5 is not None]
    if not scored:
        raise ValueError("sweep produced no NLI scores; configure nli_endpoint")
    best = max(scored, key=lambda p: p.mean_nli_at5).k
    return points, best


def sweep_csv(points: list[SweepPoint], best_k: int) -> str:
    lines = ["k,mean_nli_at5,n_items,is_best"]
    for p in points:
        val = "" if p.mean_nli_at5 is None else f"{p.mean_nli_at5:.6f}"
        lines.append(f"{p.k},{val},{p.n_items},{int(p.k == best_k)}")
    return "\n".join(lines) + "\n"


def sweep_plot_svg(points: list[SweepPoint], path: str | Path):
    """Line plot of mean NLI@5 against window size, written as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [p.k for p in points if p.mean_nli_at5 is not None]
    ys = [p.mean_nli_at5 for p in points if p.mean_nli_at5 is not None]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel("context window size k")
    ax.set_ylabel("mean NLI@5")
    ax.set_xticks(xs)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
