"""Scoring: ROUGE-L, BLEU-n, NLI entailment score, RQUGE, @k aggregation,
and the paraphrase-discrimination benchmark used to pick the reference metric.
"""

from __future__ import annotations

import json
import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

logger = logging.getLogger(__name__)

NLI_LABELS = ("entailment", "neutral", "contradiction")


class MetricError(Exception):
    pass


class ScoringUnavailable(MetricError):
    """Endpoint-backed scorer failed; the item stays unscored."""


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # rolling-array DP, O(len(a) * len(b)) time, O(len(b)) space
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, 1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l_f1(candidate: str, reference: str) -> float:
    """LCS-based F1 (beta=1) over lowercased whitespace tokens."""
    cand, ref = tokenize(candidate), tokenize(reference)
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def _ngram_counts(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i:i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu_n(candidate: str, reference: str, n: int = 4) -> float:
    """Cumulative BLEU: geometric mean of clipped n-gram precisions up to n,
    with brevity penalty. Any zero precision gives 0."""
    import math

    cand, ref = tokenize(candidate), tokenize(reference)
    if not cand:
        return 0.0
    log_sum = 0.0
    for order in range(1, n + 1):
        cand_counts = _ngram_counts(cand, order)
        ref_counts = _ngram_counts(ref, order)
        total = sum(cand_counts.values())
        if total == 0:
            return 0.0
        clipped = sum(min(c, ref_counts.get(g, 0))
                      for g, c in cand_counts.items())
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    bp = 1.0 if len(cand) > len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(log_sum / n)


class NliClient:
    """HTTP NLI endpoint: {premise, hypothesis} -> label probabilities."""

    def __init__(self, endpoint: str, timeout_s: float = 60.0,
                 max_retries: int = 2):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.max_retries = max_retries

    def probabilities(self, premise: str, hypothesis: str) -> dict[str, float]:
        last: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    self.endpoint,
                    json={"premise": premise, "hypothesis": hypothesis},
                    timeout=self.timeout_s,
                )
                resp.raise_for_status()
                data = resp.json()
                return {label: float(data[label]) for label in NLI_LABELS}
            except (requests.RequestException, KeyError, ValueError) as exc:
                last = exc
        raise ScoringUnavailable(f"NLI endpoint failed: {last}")


class StubNliClient:
    """Function-backed NLI client for tests and offline runs."""

    def __init__(self, fn: Callable[[str, str], float]):
        self.fn = fn

    def probabilities(self, premise: str, hypothesis: str) -> dict[str, float]:
        p = float(self.fn(premise, hypothesis))
        return {"entailment": p, "neutral": 1 - p, "contradiction": 0.0}


def nli_score(candidate: str, reference: str, client,
              mode: str = "symmetric") -> float:
    """Entailment probability between candidate and reference.

    `symmetric` averages both directions; `cand-to-ref` / `ref-to-cand`
    use a single direction.
    """
    if mode == "cand-to-ref":
        return client.probabilities(candidate, reference)["entailment"]
    if mode == "ref-to-cand":
        return client.probabilities(reference, candidate)["entailment"]
    if mode != "symmetric":
        raise MetricError(f"unknown NLI mode {mode!r}")
    # sort so score(a, b) == score(b, a) exactly, regardless of float order
    first, second = sorted([candidate, reference])
    fwd = client.probabilities(first, second)["entailment"]
    bwd = client.probabilities(second, first)["entailment"]
    return (fwd + bwd) / 2


def score_at_k(scores: Sequence[float]) -> float:
    """Best score among the generated candidates (max)."""
    if not scores:
        raise MetricError("score_at_k over an empty candidate list")
    return max(scores)


def truncate_for_rquge(
    context: str,
    kind: str,
    segment_text: str = "",
    max_tokens: int = 512,
    tokenizer: Callable[[str], list[str]] = str.split,
) -> str:
    """Cut a context down to the scoring model's input budget.

    Transcript contexts keep a window with the timestamp segment's first
    token at 75% of the window; extracted/rewritten contexts are cut from
    the end. The tokenizer must match the scoring endpoint's tokenizer.
    """
    tokens = tokenizer(context)
    if len(tokens) <= max_tokens:
        return context
    if kind != "transcript":
        return " ".join(tokens[:max_tokens])
    seg_tokens = tokenizer(segment_text)
    pos = _find_sublist(tokens, seg_tokens) if seg_tokens else 0
    if pos < 0:
        pos = 0
    target_before = int(max_tokens * 0.75)
    start = max(0, min(pos - target_before, len(tokens) - max_tokens))
    return " ".join(tokens[start:start + max_tokens])


def _find_sublist(haystack: list[str], needle: list[str]) -> int:
    n = len(needle)
    for i in range(len(haystack) - n + 1):
        if haystack[i:i + n] == needle:
            return i
    return -1


class RqugeClient:
    """HTTP RQUGE endpoint: {context, question, answer} -> scalar score."""

    def __init__(self, endpoint: str, timeout_s: float = 60.0,
                 max_retries: int = 2):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.max_retries = max_retries

    def score(self, context: str, question: str, answer: str) -> float:
        last: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    self.endpoint,
                    json={"context": context, "question": question,
                          "answer": answer},
                    timeout=self.timeout_s,
                )
                resp.raise_for_status()
                return float(resp.json()["score"])
            except (requests.RequestException, KeyError, ValueError) as exc:
                last = exc
        raise ScoringUnavailable(f"RQUGE endpoint failed: {last}")


class StubRqugeClient:
    def __init__(self, fn: Callable[[str, str, str], float]):
        self.fn = fn

    def score(self, context: str, question: str, answer: str) -> float:
        return float(self.fn(context, question, answer))


def rquge_score(context: str, question: str, answer: str, client) -> float:
    """Answerability score in [1, 5]; out-of-range endpoint values are clamped."""
    if not answer:
        raise MetricError("rquge_score requires a non-empty answer")
    raw = client.score(context, question, answer)
    if raw < 1.0 or raw > 5.0:
        logger.warning("RQUGE returned %s outside [1, 5]; clamping", raw)
    return min(5.0, max(1.0, raw))


@dataclass
class ItemScores:
    item_id: str
    strategy_label: str
    nli: list[float] = field(default_factory=list)
    rouge_l: list[float] = field(default_factory=list)
    rquge: list[float] = field(default_factory=list)
    nli_at5: Optional[float] = None
    rouge_l_at5: Optional[float] = None
    rquge_at5: Optional[float] = None


@dataclass
class BenchmarkPair:
    q1: str
    q2: str
    label: int  # 1 = paraphrase, 0 = not
    source: str = ""


def load_benchmark_pairs(path: str | Path) -> list[BenchmarkPair]:
    """Read (q1, q2, label) pairs from TSV or JSONL."""
    path = Path(path)
    pairs: list[BenchmarkPair] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if path.suffix == ".jsonl" or line.lstrip().startswith("{"):
                row = json.loads(line)
                pairs.append(BenchmarkPair(
                    q1=str(row["q1"]), q2=str(row["q2"]),
                    label=int(row["label"]), source=str(row.get("source", "")),
                ))
            else:
                cols = line.split("\t")
                if cols[0].lower() in ("q1", "question1"):  # header
                    continue
                pairs.append(BenchmarkPair(
                    q1=cols[0], q2=cols[1], label=int(cols[2]),
                    source=cols[3] if len(cols) > 3 else "",
                ))
    return pairs


@dataclass
class BenchmarkResult:
    scorer: str
    threshold: float
    f1: float
    accuracy: float
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0


def _confusion_f1(preds: list[int], labels: list[int]) -> tuple[float, float,
                                                                int, int, int, int]:
    tp = sum(1 for p, y in zip(preds, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(preds, labels) if p == 1 and y == 0)
    tn = sum(1 for p, y in zip(preds, labels) if p == 0 and y == 0)
    fn = sum(1 for p, y in zip(preds, labels) if p == 0 and y == 1)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    accuracy = (tp + tn) / len(labels)
    return f1, accuracy, tp, fp, tn, fn


def paraphrase_benchmark(
    pairs: list[BenchmarkPair],
    scorer: Callable[[str, str], float],
    scorer_name: str = "scorer",
    threshold: float = 0.5,
    sweep_thresholds: bool = False,
) -> BenchmarkResult:
    """Score each pair, predict paraphrase iff score >= threshold, and report
    F1 on the positive class plus accuracy.

    With `sweep_thresholds`, the threshold maximizing F1 is reported instead
    (the fixed-threshold decision rule is ambiguous for continuous metrics).
    """
    if not pairs:
        raise MetricError("empty benchmark pair set")
    scores = [scorer(p.q1, p.q2) for p in pairs]
    labels = [p.label for p in pairs]

    def evaluate(thr: float) -> BenchmarkResult:
        preds = [1 if s >= thr else 0 for s in scores]
        f1, acc, tp, fp, tn, fn = _confusion_f1(preds, labels)
        return BenchmarkResult(scorer=scorer_name, threshold=thr, f1=f1,
                               accuracy=acc, tp=tp, fp=fp, tn=tn, fn=fn)

    if not sweep_thresholds:
        return evaluate(threshold)
    best = None
    for thr in sorted(set(scores)) + [max(scores) + 1e-9]:
        result = evaluate(thr)
        if best is None or result.f1 > best.f1:
            best = result
    return best


@dataclass
class ReportRow:
    strategy_label: str
    n_items: int
    n_unscored_nli: int
    n_unscored_rquge: int
    nli_at5: Optional[float]  # x100, 2 decimals
    rouge_l_at5: Optional[float]  # x100, 2 decimals
    rquge_at5: Optional[float]  # 2 decimals


def aggregate_report(item_scores: list[ItemScores]) -> list[ReportRow]:
    """Mean over items per strategy. NLI and ROUGE are reported x100."""
    by_strategy: dict[str, list[ItemScores]] = {}
    for s in item_scores:
        by_strategy.setdefault(s.strategy_label, []).append(s)
    rows = []
    for label in sorted(by_strategy):
        group = by_strategy[label]
        nli_vals = [s.nli_at5 for s in group if s.nli_at5 is not None]
        rouge_vals = [s.rouge_l_at5 for s in group if s.rouge_l_at5 is not None]
        rquge_vals = [s.rquge_at5 for s in group if s.rquge_at5 is not None]
        rows.append(ReportRow(
            strategy_label=label,
            n_items=len(group),
            n_unscored_nli=len(group) - len(nli_vals),
            n_unscored_rquge=len(group) - len(rquge_vals),
            nli_at5=(round(100 * statistics.fmean(nli_vals), 2)
                     if nli_vals else None),
            rouge_l_at5=(round(100 * statistics.fmean(rouge_vals), 2)
                         if rouge_vals else None),
            rquge_at5=(round(statistics.fmean(rquge_vals), 2)
                       if rquge_vals else None),
        ))
    return rows


def report_csv(rows: list[ReportRow]) -> str:
    lines = ["strategy,n_items,nli_at5,rouge_l_at5,rquge_at5,"
             "unscored_nli,unscored_rquge"]
    for r in rows:
        lines.append(",".join([
            r.strategy_label, str(r.n_items),
            _cell(r.nli_at5), _cell(r.rouge_l_at5), _cell(r.rquge_at5),
            str(r.n_unscored_nli), str(r.n_unscored_rquge),
        ]))
    return "\n".join(lines) + "\n"


def report_markdown(rows: list[ReportRow]) -> str:
    lines = ["| Strategy | NLI@5 | RougeL@5 | RQUGE@5 | Items |",
             "|---|---|---|---|---|"]
    for r in rows:
        lines.append(
            f"| {r.strategy_label} | {_cell(r.nli_at5)} | "
            f"{_cell(r.rouge_l_at5)} | {_cell(r.rquge_at5)} | {r.n_items} |"
        )
    footnotes = []
    total_nli = sum(r.n_unscored_nli for r in rows)
    total_rquge = sum(r.n_unscored_rquge for r in rows)
    if total_nli:
        footnotes.append(f"{total_nli} item(s) unscored for NLI (excluded)")
    if total_rquge:
        footnotes.append(f"{total_rquge} item(s) unscored for RQUGE (excluded)")
    out = "\n".join(lines) + "\n"
    if footnotes:
        out += "\n" + "\n".join(f"*{note}*" for note in footnotes) + "\n"
    return out


def _cell(value: Optional[float]) -> str:
    return "unscored" if value is None else f"{value:.2f}"
