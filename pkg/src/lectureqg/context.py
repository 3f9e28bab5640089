"""Context construction: selection strategies, rewriting, and hard validators.

Strategies: All (everything), Rule-k (fixed window around the timestamp),
Direct / CoT (LLM selection, integrity-validated), CombineMM (CoT from both
modalities concatenated), each optionally followed by rewriting into
answer-containing knowledge statements.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .corpus import Lecture, QuizItem

RULE_SWEEP_KS = (1, 3, 5, 7, 9, 11)
DEFAULT_RETRIES = 2
DEFAULT_RULE_BEST_K = 5

VARIANTS = ("all", "rule", "direct", "cot", "combine")
MODALITIES = ("transcript", "keyframes", "both")


class ContextError(Exception):
    pass


def _load_template(name: str) -> str:
    return resources.files("lectureqg.prompts").joinpath(f"{name}.txt").read_text(
        encoding="utf-8"
    )


TEMPLATES = {
    name: _load_template(name)
    for name in ("select_direct_transcript", "select_cot_transcript",
                 "select_direct_keyframes", "select_cot_keyframes",
                 "rewrite", "qgen")
}


@dataclass(frozen=True)
class ContextStrategy:
    variant: str
    modality: str = "transcript"
    k: Optional[int] = None
    rewrite: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContextError(f"unknown variant {self.variant!r}")
        if self.modality not in MODALITIES:
            raise ContextError(f"unknown modality {self.modality!r}")
        if self.variant == "combine" and self.modality != "both":
            raise ContextError("combine requires modality 'both'")
        if self.variant == "rule" and (self.k is None or self.k < 1):
            raise ContextError("rule variant requires k >= 1")

    @property
    def label(self) -> str:
        base = {"all": "All", "rule": f"Rule-{self.k}", "direct": "Direct",
                "cot": "CoT", "combine": "CombineMM"}[self.variant]
        if self.rewrite:
            base += "+Rewrite"
        return f"{base}({self.modality})"

    @classmethod
    def parse(cls, label: str) -> "ContextStrategy":
        """Parse labels like 'CoT+Rewrite(transcript)' or 'rule-5'."""
        text = label.strip()
        modality = "transcript"
        m = re.match(r"^(.*?)\((\w+)\)$", text)
        if m:
            text, modality = m.group(1), m.group(2)
        rewrite = False
        if text.lower().endswith("+rewrite"):
            rewrite = True
            text = text[: -len("+rewrite")]
        text = text.strip().lower()
        if text.startswith("rule-"):
            return cls("rule", modality, k=int(text.split("-", 1)[1]),
                       rewrite=rewrite)
        variant = {"all": "all", "direct": "direct", "cot": "cot",
                   "combinemm": "combine", "combine": "combine"}.get(text)
        if variant is None:
            raise ContextError(f"cannot parse strategy label {label!r}")
        if variant == "combine":
            modality = "both"
        return cls(variant, modality, rewrite=rewrite)


@dataclass
class KnowledgeStatement:
    text: str
    contains_answer: bool
    note: str = ""


@dataclass
class Validation:
    integrity: str = "n/a"  # pass | fail | fallback | n/a
    explicitness: str = "n/a"  # pass | failed | n/a
    retries: int = 0
    degraded: str = ""  # e.g. "keyframes-empty" for CombineMM fallback


@dataclass
class ContextBundle:
    strategy: ContextStrategy
    selected_transcript: list[str] = field(default_factory=list)
    selected_keyframe_text: list[str] = field(default_factory=list)
    contextual_summary: str = ""
    statements: list[KnowledgeStatement] = field(default_factory=list)
    validation: Validation = field(default_factory=Validation)
    reasoning: str = ""
    timestamp_id: int = 0

    def excerpts(self) -> list[str]:
        return self.selected_transcript + self.selected_keyframe_text


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def validate_integrity(excerpt: str, transcript_text: str) -> bool:
    """Excerpt must be a verbatim contiguous substring up to whitespace runs.

    Case is preserved deliberately: a case change is an alteration.
    """
    return normalize_ws(excerpt) in normalize_ws(transcript_text)


def validate_explicitness(statement: str, answer: str) -> bool:
    """The answer span must appear word-for-word in the statement.

    Matching is case-insensitive, whitespace-collapsed, and tolerant of the
    answer's terminal punctuation (reference answers often end in a period
    that statements embed mid-sentence).
    """
    norm_statement = normalize_ws(statement).lower()
    norm_answer = normalize_ws(answer).lower().rstrip(".?!").rstrip()
    if not norm_answer:
        return False
    return norm_answer in norm_statement


def _context_units(lecture: Lecture, modality: str) -> list[str]:
    if modality == "transcript":
        units = [seg.text for seg in lecture.segments]
        if not units:
            raise ContextError(f"lecture {lecture.id} has an empty transcript")
        return units
    if modality == "keyframes":
        if not lecture.keyframes:
            raise ContextError(f"lecture {lecture.id} has no keyframes")
        uncaptioned = [kf.index for kf in lecture.keyframes
                       if not kf.caption and not kf.caption_failed]
        if uncaptioned:
            raise ContextError(
                f"lecture {lecture.id}: keyframes {uncaptioned} not captioned"
            )
        return [kf.caption for kf in lecture.keyframes]
    raise ContextError(f"single-modality operation got modality {modality!r}")


def _timestamp_unit_id(lecture: Lecture, item: QuizItem, modality: str) -> int:
    if modality == "transcript":
        return item.segment_index
    kf_index = lecture.keyframe_for_segment(item.segment_index)
    if kf_index is None:
        # no alignment recorded: best-effort by timestamp
        kf_index = 1
        for kf in lecture.keyframes:
            if kf.timestamp_s <= item.timestamp_s:
                kf_index = kf.index
    return kf_index


def numbered_list(units: list[str]) -> str:
    return "\n".join(f"{i}. {text}" for i, text in enumerate(units, 1))


def build_all_context(lecture: Lecture, item: QuizItem,
                      modality: str = "transcript") -> ContextBundle:
    """Entire transcript (or caption set) as an ordered, ID-prefixed list."""
    units = _context_units(lecture, modality)
    bundle = ContextBundle(
        strategy=ContextStrategy("all", modality),
        timestamp_id=_timestamp_unit_id(lecture, item, modality),
    )
    if modality == "transcript":
        bundle.selected_transcript = list(units)
    else:
        bundle.selected_keyframe_text = list(units)
    bundle.validation.integrity = "pass"
    return bundle


def rule_window(center: int, k: int, n: int) -> tuple[int, int]:
    """1-based inclusive window of min(k, n) units centered on `center`.

    Shifted, never shrunk, at the boundaries.
    """
    k = min(k, n)
    lo = center - (k - 1) // 2
    lo = max(1, min(lo, n - k + 1))
    return lo, lo + k - 1


def build_rule_context(lecture: Lecture, item: QuizItem, k: int,
                       modality: str = "transcript") -> ContextBundle:
    """Fixed window of k consecutive units around the resolved timestamp."""
    units = _context_units(lecture, modality)
    center = _timestamp_unit_id(lecture, item, modality)
    lo, hi = rule_window(center, k, len(units))
    bundle = ContextBundle(
        strategy=ContextStrategy("rule", modality, k=k),
        timestamp_id=center,
    )
    window = units[lo - 1:hi]
    if modality == "transcript":
        bundle.selected_transcript = window
    else:
        bundle.selected_keyframe_text = window
    bundle.validation.integrity = "pass"
    return bundle


def render_selection_prompt(strategy_variant: str, modality: str,
                            lecture: Lecture, item: QuizItem) -> str:
    units = _context_units(lecture, modality)
    unit_id = _timestamp_unit_id(lecture, item, modality)
    kind = "transcript" if modality == "transcript" else "keyframes"
    template = TEMPLATES[f"select_{strategy_variant}_{kind}"]
    placeholder = "{context_id}" if kind == "transcript" else "{keyframe_id}"
    return (template
            .replace("{context}", numbered_list(units))
            .replace("{answer}", item.answer)
            .replace(placeholder, str(unit_id)))


_EXCERPT_HEADER = re.compile(
    r"(?:From Transcript Excerpt|From Keyframe Excerpt|From Slides)\s*:",
    re.IGNORECASE,
)


def parse_selection_output(text: str) -> tuple[str, str, list[str]]:
    """Split a selection response into (reasoning, summary, excerpts).

    Raises ContextError when no 'Extracted Context:' block is present.
    """
    text = text.replace("\r\n", "\n")
    reasoning = ""
    m = re.search(r"Extracted Context\s*:", text, re.IGNORECASE)
    if not m:
        raise ContextError("no 'Extracted Context:' block in model output")
    head = text[: m.start()]
    rm = re.search(r"Reasoning\s*:", head, re.IGNORECASE)
    if rm:
        reasoning = head[rm.end():].strip()
    body = text[m.end():].strip()
    summary = ""
    sm = re.search(r"Contextual summary\s*:", body, re.IGNORECASE)
    if sm:
        rest = body[sm.end():]
        em = _EXCERPT_HEADER.search(rest)
        summary = (rest[: em.start()] if em else rest).strip()
        body = body[: sm.start()] + (rest[em.start():] if em else "")
    excerpts: list[str] = []
    if _EXCERPT_HEADER.search(body):
        chunks = _EXCERPT_HEADER.sub("\x00", body).split("\x00")[1:]
    else:
        chunks = [body]
    for chunk in chunks:
        excerpts.extend(_split_excerpts(chunk))
    excerpts = [e for e in excerpts if e.strip()]
    if not excerpts:
        raise ContextError("no excerpt text found in model output")
    return reasoning, summary, excerpts


def _strip_quotes(text: str) -> str:
    text = text.strip()
    for open_q, close_q in (('"', '"'), ("“", "”"), ("``", "''"), ("'", "'")):
        if text.startswith(open_q) and text.endswith(close_q) and len(text) > 2:
            return text[len(open_q):-len(close_q)].strip()
    return text


def _split_excerpts(chunk: str) -> list[str]:
    chunk = chunk.strip()
    if not chunk:
        return []
    quoted = re.findall(r'"([^"]+)"|“([^”]+)”', chunk)
    if quoted:
        return [a or b for a, b in quoted]
    parts = [p.strip() for p in re.split(r"\n\s*\n", chunk)]
    return [_strip_quotes(p) for p in parts if p]


def _llm_select(variant: str, lecture: Lecture, item: QuizItem, modality: str,
                client, retries: int = DEFAULT_RETRIES,
                rule_best_k: int = DEFAULT_RULE_BEST_K) -> ContextBundle:
    prompt = render_selection_prompt(variant, modality, lecture, item)
    transcript_text = " ".join(_context_units(lecture, modality))
    bundle = ContextBundle(
        strategy=ContextStrategy(variant, modality),
        timestamp_id=_timestamp_unit_id(lecture, item, modality),
    )
    attempt_prompt = prompt
    for attempt in range(retries + 1):
        bundle.validation.retries = attempt
        try:
            exchange = client.complete(attempt_prompt)
            reasoning, summary, excerpts = parse_selection_output(exchange.response)
        except ContextError:
            attempt_prompt = (
                prompt + "\n\nReminder: follow the output format exactly, "
                "starting the final selection with \"Extracted Context:\"."
            )
            continue
        if all(validate_integrity(e, transcript_text) for e in excerpts):
            bundle.reasoning = reasoning
            bundle.contextual_summary = summary
            if modality == "transcript":
                bundle.selected_transcript = excerpts
            else:
                bundle.selected_keyframe_text = excerpts
            bundle.validation.integrity = "pass"
            return bundle
        attempt_prompt = (
            prompt + "\n\nReminder: the extracted excerpt must match the "
            "original text exactly. Do not alter the text in any way."
        )
    # fall back to a rule window so the pipeline always yields a context
    fallback = build_rule_context(lecture, item, rule_best_k, modality)
    fallback.strategy = bundle.strategy
    fallback.validation.integrity = "fallback"
    fallback.validation.retries = retries
    return fallback


def select_direct(lecture: Lecture, item: QuizItem, modality: str, client,
                  retries: int = DEFAULT_RETRIES,
                  rule_best_k: int = DEFAULT_RULE_BEST_K) -> ContextBundle:
    """LLM selection with straightforward instructions; integrity-validated."""
    return _llm_select("direct", lecture, item, modality, client,
                       retries, rule_best_k)


def select_cot(lecture: Lecture, item: QuizItem, modality: str, client,
               retries: int = DEFAULT_RETRIES,
               rule_best_k: int = DEFAULT_RULE_BEST_K) -> ContextBundle:
    """Chain-of-thought selection; reasoning retained, excerpts validated."""
    return _llm_select("cot", lecture, item, modality, client,
                       retries, rule_best_k)


def render_bundle_context(bundle: ContextBundle) -> str:
    """The context payload handed to rewriting / question generation."""
    if bundle.statements:
        return "\n".join(f"{i}. {s.text}"
                         for i, s in enumerate(bundle.statements, 1))
    if bundle.strategy.variant == "all":
        return numbered_list(bundle.excerpts())
    if bundle.strategy.variant == "combine":
        parts = []
        if bundle.contextual_summary:
            parts.append(f"Contextual summary: {bundle.contextual_summary}")
        for exc in bundle.selected_transcript:
            parts.append(f'From Transcript Excerpt: "{exc}"')
        for exc in bundle.selected_keyframe_text:
            parts.append(f'From Keyframe Excerpt: "{exc}"')
        return "\n".join(parts)
    parts = []
    if bundle.contextual_summary:
        parts.append(f"Contextual summary: {bundle.contextual_summary}")
    parts.extend(bundle.excerpts())
    return "\n".join(parts)


def parse_rewrite_output(text: str) -> tuple[str, list[str]]:
    text = text.replace("\r\n", "\n")
    reasoning = ""
    m = re.search(r"Rewritten Contexts\s*:", text, re.IGNORECASE)
    if not m:
        raise ContextError("no 'Rewritten Contexts:' block in model output")
    head = text[: m.start()]
    rm = re.search(r"Reasoning\s*:", head, re.IGNORECASE)
    if rm:
        reasoning = head[rm.end():].strip()
    body = text[m.end():].strip()
    items = re.split(r"\n\s*(?:\d+[.)]|[-*])\s+", "\n" + body)
    statements = [_strip_quotes(s.strip()) for s in items if s.strip()]
    # un-numbered output: treat each non-empty line as a statement
    if len(statements) == 1 and "\n" in statements[0]:
        statements = [_strip_quotes(line.strip())
                      for line in statements[0].splitlines() if line.strip()]
    return reasoning, statements


def rewrite_context(bundle: ContextBundle, item: QuizItem, client,
                    retries: int = 1) -> ContextBundle:
    """Rewrite the selected context into answer-containing knowledge statements.

    Statements failing the explicitness check are dropped; if every statement
    fails after one retry, the bundle keeps its selection-only context with
    the rewrite marked failed.
    """
    if not bundle.excerpts():
        raise ContextError("rewrite requires at least one excerpt")
    prompt = (TEMPLATES["rewrite"]
              .replace("{context}", render_bundle_context(bundle))
              .replace("{answer}", item.answer))
    attempt_prompt = prompt
    for attempt in range(retries + 1):
        try:
            exchange = client.complete(attempt_prompt)
            _, raw_statements = parse_rewrite_output(exchange.response)
        except ContextError:
            raw_statements = []
        kept = [
            KnowledgeStatement(text=s, contains_answer=True)
            for s in raw_statements
            if validate_explicitness(s, item.answer)
        ]
        if kept:
            bundle.statements = kept
            bundle.validation.explicitness = "pass"
            return bundle
        attempt_prompt = (
            prompt + f"\n\nReminder: every statement must contain the answer "
            f"\"{item.answer}\" WORD-FOR-WORD."
        )
    bundle.statements = []
    bundle.validation.explicitness = "failed"
    return bundle


def combine_multimodal(transcript_bundle: ContextBundle,
                       keyframe_bundle: ContextBundle) -> ContextBundle:
    """Concatenate CoT selections from both modalities into one bundle."""
    combined = ContextBundle(
        strategy=ContextStrategy("combine", "both"),
        selected_transcript=list(transcript_bundle.selected_transcript),
        selected_keyframe_text=list(keyframe_bundle.selected_keyframe_text),
        contextual_summary=(transcript_bundle.contextual_summary
                            or keyframe_bundle.contextual_summary),
        timestamp_id=transcript_bundle.timestamp_id,
    )
    if not combined.selected_transcript and not combined.selected_keyframe_text:
        raise ContextError("both modalities empty; nothing to combine")
    if not combined.selected_keyframe_text:
        combined.validation.degraded = "keyframes-empty"
    elif not combined.selected_transcript:
        combined.validation.degraded = "transcript-empty"
    combined.validation.integrity = (
        "pass"
        if transcript_bundle.validation.integrity == "pass"
        and keyframe_bundle.validation.integrity in ("pass", "fallback", "n/a")
        else "fallback"
    )
    return combined
