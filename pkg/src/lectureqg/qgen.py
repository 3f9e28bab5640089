"""MCQ generation from a context bundle, and tolerant parsing of model output.

The generation prompt is identical across context strategies except for the
context payload; only the All strategy includes the Timestamp line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .context import ContextBundle, TEMPLATES, render_bundle_context
from .corpus import QuizItem

MAX_CANDIDATES = 5


class GenerationError(Exception):
    """No parseable question candidates after retry."""


@dataclass
class QuestionCandidate:
    ordinal: int
    stem: str
    options: list[tuple[str, str]] = field(default_factory=list)  # (label, text)
    answer_letter: Optional[str] = None
    raw_block: str = ""
    interrogative: bool = True


@dataclass
class QuestionSet:
    item_id: str
    strategy_label: str
    candidates: list[QuestionCandidate] = field(default_factory=list)
    raw_response: str = ""
    cache_key: str = ""


def render_qgen_prompt(bundle: ContextBundle, item: QuizItem) -> str:
    timestamp_line = ""
    if bundle.strategy.variant == "all":
        timestamp_line = f"Timestamp: {bundle.timestamp_id}\n"
    return (TEMPLATES["qgen"]
            .replace("{context}", render_bundle_context(bundle))
            .replace("{answer}", item.answer)
            .replace("{timestamp_line}", timestamp_line))


_QUESTION_MARKER = re.compile(r"(?:^|\n)\s*Q(\d+)[.:)]\s*", re.IGNORECASE)
_OPTION_MARKER = re.compile(r"(?:^|\s)([A-F])[).]\s+")
_ANSWER_LINE = re.compile(r"(?:^|\n)\s*(?:Correct\s+)?Answer\s*:\s*([A-F])\b",
                          re.IGNORECASE)


def parse_mcq_block(text: str) -> tuple[list[QuestionCandidate], list[str]]:
    """Parse 'Q1. ...' blocks into candidates.

    Tolerates Windows newlines, 'Q1:' variants, and options packed on one
    line. Returns (candidates, diagnostics); blocks that cannot be parsed are
    reported in the diagnostics rather than raising.
    """
    text = text.replace("\r\n", "\n")
    markers = list(_QUESTION_MARKER.finditer(text))
    candidates: list[QuestionCandidate] = []
    diagnostics: list[str] = []
    for i, m in enumerate(markers):
        end = markers[i + 1].start() if i + 1 < len(markers) else len(text)
        block = text[m.end():end].strip()
        ordinal = int(m.group(1))
        candidate = _parse_block(ordinal, block)
        if candidate is None:
            diagnostics.append(f"Q{ordinal}: empty stem, skipped")
            continue
        if not candidate.interrogative:
            diagnostics.append(f"Q{ordinal}: stem is not interrogative")
        if len(candidate.options) < 2:
            diagnostics.append(
                f"Q{ordinal}: only {len(candidate.options)} option(s)")
        candidates.append(candidate)
    return candidates, diagnostics


def _parse_block(ordinal: int, block: str) -> Optional[QuestionCandidate]:
    answer_letter = None
    am = _ANSWER_LINE.search(block)
    if am:
        answer_letter = am.group(1).upper()
        block = block[: am.start()] + block[am.end():]
    first_opt = _OPTION_MARKER.search(block)
    if first_opt:
        stem = block[: first_opt.start()].strip()
        options_text = block[first_opt.start():]
    else:
        stem = block.strip()
        options_text = ""
    if not stem:
        return None
    options: list[tuple[str, str]] = []
    opt_markers = list(_OPTION_MARKER.finditer(options_text))
    for j, om in enumerate(opt_markers):
        end = (opt_markers[j + 1].start()
               if j + 1 < len(opt_markers) else len(options_text))
        label = om.group(1).upper()
        body = options_text[om.end():end].strip()
        if body:
            options.append((label, body))
    # drop trailing duplicates / out-of-order labels; keep the in-order prefix
    ordered: list[tuple[str, str]] = []
    for label, body in options:
        expected = chr(ord("A") + len(ordered))
        if label != expected:
            break
        ordered.append((label, body))
    return QuestionCandidate(
        ordinal=ordinal,
        stem=" ".join(stem.split()),
        options=ordered,
        answer_letter=answer_letter,
        raw_block=block,
        interrogative=stem.rstrip().endswith("?"),
    )


def generate_questions(bundle: ContextBundle, item: QuizItem, client,
                       retries: int = 1) -> QuestionSet:
    """Generate up to five MCQ candidates for (bundle, item).

    Retries once on zero parseable candidates, then raises GenerationError.
    """
    prompt = render_qgen_prompt(bundle, item)
    attempt_prompt = prompt
    last_response = ""
    for attempt in range(retries + 1):
        exchange = client.complete(attempt_prompt)
        last_response = exchange.response
        candidates, _ = parse_mcq_block(exchange.response)
        if candidates:
            return QuestionSet(
                item_id=item.id,
                strategy_label=bundle.strategy.label,
                candidates=candidates[:MAX_CANDIDATES],
                raw_response=exchange.response,
                cache_key=exchange.cache_key,
            )
        attempt_prompt = (
            prompt + "\n\nReminder: use the exact question format shown above, "
            "starting each question with \"Q1.\", \"Q2.\", etc."
        )
    raise GenerationError(
        f"no parseable questions for item {item.id} "
        f"({bundle.strategy.label}); last response: {last_response[:200]!r}"
    )
