"""Data model and persistence for lectures and quiz items.

A corpus lives in a directory: `manifest.json` lists the lectures, and each
lecture directory holds `transcript.jsonl`, `keyframes.jsonl`, `quiz.jsonl`,
and a `frames/` image directory.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

BANNED_ANSWERS = {"yes", "no", "none of the above"}


class CorpusError(Exception):
    """Raised on schema violations or inconsistent corpus files.

    Carries enough context (lecture id, field path) to locate the offender.
    """

    def __init__(self, message: str, lecture_id: str = "", path: str = ""):
        self.lecture_id = lecture_id
        self.path = path
        prefix = f"[{lecture_id}] " if lecture_id else ""
        suffix = f" (at {path})" if path else ""
        super().__init__(f"{prefix}{message}{suffix}")


@dataclass
class TranscriptSegment:
    """One transcribed speech segment. `index` is the 1-based ID shown in prompts."""

    index: int
    start_s: float
    end_s: float
    text: str


@dataclass
class Keyframe:
    """One saved slide frame. `caption` stays empty until the captioning stage runs."""

    index: int
    timestamp_s: float
    image_ref: str
    phash: list[int] = field(default_factory=list)
    caption: str = ""
    caption_failed: bool = False


@dataclass
class Lecture:
    id: str
    course: str
    duration_s: float
    segments: list[TranscriptSegment] = field(default_factory=list)
    keyframes: list[Keyframe] = field(default_factory=list)
    # keyframe index -> list of segment indices it owns
    alignment: dict[int, list[int]] = field(default_factory=dict)

    def segment_by_index(self, index: int) -> TranscriptSegment:
        seg = self.segments[index - 1]
        if seg.index != index:
            raise CorpusError(f"segment index {index} out of order", self.id)
        return seg

    def resolve_timestamp(self, timestamp_s: float) -> int:
        """Map a timestamp to the segment whose span contains it.

        A timestamp on a shared boundary resolves to the earlier segment.
        """
        for seg in self.segments:
            if seg.start_s <= timestamp_s <= seg.end_s:
                return seg.index
        raise CorpusError(
            f"timestamp {timestamp_s} not contained in any segment", self.id
        )

    def keyframe_for_segment(self, segment_index: int) -> Optional[int]:
        for kf_index, seg_indices in self.alignment.items():
            if segment_index in seg_indices:
                return kf_index
        return None

    def transcript_text(self) -> str:
        return " ".join(seg.text for seg in self.segments)


@dataclass
class QuizItem:
    """One annotated quiz instance: timestamp, answer span, and the reference MCQ."""

    id: str
    lecture_id: str
    timestamp_s: float
    segment_index: int
    answer: str
    reference_question: str
    distractors: list[str] = field(default_factory=list)
    choice_count: int = 0


@dataclass
class FieldStats:
    mean: float
    std: float
    min: float
    median: float
    max: float


@dataclass
class CorpusStats:
    """Per-field summary statistics over the corpus."""

    fields: dict[str, FieldStats]


def _require(obj: dict, key: str, lecture_id: str, path: str):
    if key not in obj:
        raise CorpusError(f"missing field '{key}'", lecture_id, path)
    return obj[key]


def _read_jsonl(path: Path, lecture_id: str) -> list[dict]:
    if not path.exists():
        raise CorpusError(f"missing file {path.name}", lecture_id, str(path))
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(
                    f"bad JSON: {exc}", lecture_id, f"{path.name}:{lineno}"
                ) from exc
    return rows


def _load_segments(rows: list[dict], lecture_id: str) -> list[TranscriptSegment]:
    segments = []
    prev_end = None
    for i, row in enumerate(rows):
        path = f"transcript.jsonl:{i + 1}"
        seg = TranscriptSegment(
            index=int(_require(row, "index", lecture_id, path)),
            start_s=float(_require(row, "start_s", lecture_id, path)),
            end_s=float(_require(row, "end_s", lecture_id, path)),
            text=str(_require(row, "text", lecture_id, path)),
        )
        if seg.index != i + 1:
            raise CorpusError(
                f"segment index {seg.index} not contiguous (expected {i + 1})",
                lecture_id, path,
            )
        if seg.start_s > seg.end_s:
            raise CorpusError("segment start_s > end_s", lecture_id, path)
        if not seg.text.strip():
            raise CorpusError("segment text empty", lecture_id, path)
        if prev_end is not None and seg.start_s < prev_end:
            raise CorpusError("segments overlap or out of order", lecture_id, path)
        prev_end = seg.end_s
        segments.append(seg)
    return segments


def _load_keyframes(rows: list[dict], lecture_id: str) -> list[Keyframe]:
    keyframes = []
    prev_ts = None
    hash_len = None
    for i, row in enumerate(rows):
        path = f"keyframes.jsonl:{i + 1}"
        kf = Keyframe(
            index=int(_require(row, "index", lecture_id, path)),
            timestamp_s=float(_require(row, "timestamp_s", lecture_id, path)),
            image_ref=str(row.get("image_ref", "")),
            phash=list(row.get("phash", [])),
            caption=str(row.get("caption", "")),
            caption_failed=bool(row.get("caption_failed", False)),
        )
        if prev_ts is not None and kf.timestamp_s <= prev_ts:
            raise CorpusError("keyframe timestamps not strictly increasing",
                              lecture_id, path)
        prev_ts = kf.timestamp_s
        if kf.phash:
            if hash_len is None:
                hash_len = len(kf.phash)
            elif len(kf.phash) != hash_len:
                raise CorpusError("inconsistent phash length", lecture_id, path)
        keyframes.append(kf)
    return keyframes


def _load_quiz(rows: list[dict], lecture: Lecture) -> list[QuizItem]:
    items = []
    for i, row in enumerate(rows):
        path = f"quiz.jsonl:{i + 1}"
        lid = lecture.id
        answer = str(_require(row, "answer", lid, path))
        if not answer.strip():
            raise CorpusError("answer empty", lid, path)
        if answer.strip().lower() in BANNED_ANSWERS:
            raise CorpusError(
                f"answer {answer!r} is in the banned-answer set "
                f"(meaningless answers such as yes/no are not allowed)",
                lid, path,
            )
        timestamp_s = float(_require(row, "timestamp_s", lid, path))
        if not 0 <= timestamp_s <= lecture.duration_s:
            raise CorpusError(
                f"timestamp {timestamp_s} outside lecture duration "
                f"{lecture.duration_s}", lid, path,
            )
        # Released files may carry either raw seconds (resolved by containment)
        # or a pre-resolved segment ID (passed through).
        if "segment_index" in row and row["segment_index"] is not None:
            segment_index = int(row["segment_index"])
            if not 1 <= segment_index <= len(lecture.segments):
                raise CorpusError(
                    f"segment_index {segment_index} out of range", lid, path
                )
        else:
            segment_index = lecture.resolve_timestamp(timestamp_s)
        items.append(QuizItem(
            id=str(_require(row, "id", lid, path)),
            lecture_id=lid,
            timestamp_s=timestamp_s,
            segment_index=segment_index,
            answer=answer,
            reference_question=str(_require(row, "reference_question", lid, path)),
            distractors=[str(d) for d in row.get("distractors", [])],
            choice_count=int(row.get("choice_count",
                                     1 + len(row.get("distractors", [])))),
        ))
    return items


def load_lecture(lecture_dir: Path, course: str = "") -> Lecture:
    lecture_id = lecture_dir.name
    meta_path = lecture_dir / "lecture.json"
    meta = {}
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    segments = _load_segments(
        _read_jsonl(lecture_dir / "transcript.jsonl", lecture_id), lecture_id
    )
    kf_path = lecture_dir / "keyframes.jsonl"
    keyframes = (_load_keyframes(_read_jsonl(kf_path, lecture_id), lecture_id)
                 if kf_path.exists() else [])
    max_end = max((s.end_s for s in segments), default=0.0)
    duration = float(meta.get("duration_s", max_end))
    if duration < max_end:
        raise CorpusError(
            f"duration_s {duration} < last segment end {max_end}",
            lecture_id, "lecture.json:duration_s",
        )
    lecture = Lecture(
        id=lecture_id,
        course=course or str(meta.get("course", "")),
        duration_s=duration,
        segments=segments,
        keyframes=keyframes,
        alignment={int(k): [int(i) for i in v]
                   for k, v in meta.get("alignment", {}).items()},
    )
    for kf_index, seg_indices in lecture.alignment.items():
        if keyframes and not any(kf.index == kf_index for kf in keyframes):
            raise CorpusError(f"alignment references unknown keyframe {kf_index}",
                              lecture_id, "lecture.json:alignment")
        for si in seg_indices:
            if not 1 <= si <= len(segments):
                raise CorpusError(
                    f"alignment references unknown segment {si}",
                    lecture_id, "lecture.json:alignment",
                )
    return lecture


def load_corpus(root: str | Path) -> list[tuple[Lecture, list[QuizItem]]]:
    """Load every lecture listed in `manifest.json` with its quiz items."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise CorpusError("missing manifest.json", path=str(manifest_path))
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    course = str(manifest.get("course", ""))
    out = []
    for name in manifest.get("lectures", []):
        lecture_dir = root / name
        if not lecture_dir.is_dir():
            raise CorpusError("missing lecture directory", name, str(lecture_dir))
        lecture = load_lecture(lecture_dir, course)
        quiz_path = lecture_dir / "quiz.jsonl"
        items = (_load_quiz(_read_jsonl(quiz_path, lecture.id), lecture)
                 if quiz_path.exists() else [])
        out.append((lecture, items))
    return out


def _segment_row(seg: TranscriptSegment) -> dict:
    return {"index": seg.index, "start_s": seg.start_s, "end_s": seg.end_s,
            "text": seg.text}


def _keyframe_row(kf: Keyframe) -> dict:
    row = {"index": kf.index, "timestamp_s": kf.timestamp_s,
           "image_ref": kf.image_ref, "phash": kf.phash, "caption": kf.caption}
    if kf.caption_failed:
        row["caption_failed"] = True
    return row


def quiz_item_row(item: QuizItem) -> dict:
    return {
        "id": item.id,
        "timestamp_s": item.timestamp_s,
        "segment_index": item.segment_index,
        "answer": item.answer,
        "reference_question": item.reference_question,
        "distractors": item.distractors,
        "choice_count": item.choice_count,
    }


def _write_jsonl(path: Path, rows: Iterable[dict]):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def save_corpus(corpus: list[tuple[Lecture, list[QuizItem]]], root: str | Path):
    """Write a corpus back to disk in the load_corpus layout."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    course = corpus[0][0].course if corpus else ""
    manifest = {"course": course, "lectures": [lec.id for lec, _ in corpus]}
    (root / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    for lecture, items in corpus:
        lecture_dir = root / lecture.id
        lecture_dir.mkdir(exist_ok=True)
        meta = {"course": lecture.course, "duration_s": lecture.duration_s,
                "alignment": {str(k): v for k, v in lecture.alignment.items()}}
        (lecture_dir / "lecture.json").write_text(
            json.dumps(meta, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        _write_jsonl(lecture_dir / "transcript.jsonl",
                     (_segment_row(s) for s in lecture.segments))
        _write_jsonl(lecture_dir / "keyframes.jsonl",
                     (_keyframe_row(k) for k in lecture.keyframes))
        _write_jsonl(lecture_dir / "quiz.jsonl",
                     (quiz_item_row(i) for i in items))


def _word_count(text: str) -> int:
    return len(text.split())


def _stats(values: list[float]) -> FieldStats:
    return FieldStats(
        mean=statistics.fmean(values),
        std=statistics.pstdev(values),
        min=min(values),
        median=statistics.median(values),
        max=max(values),
    )


def corpus_stats(corpus: list[tuple[Lecture, list[QuizItem]]]) -> CorpusStats:
    """Summary statistics: word counts, segment/keyframe counts, choice counts."""
    if not corpus:
        raise CorpusError("empty corpus")
    transcript_words = [sum(_word_count(s.text) for s in lec.segments)
                        for lec, _ in corpus]
    segment_counts = [len(lec.segments) for lec, _ in corpus]
    keyframe_counts = [len(lec.keyframes) for lec, _ in corpus]
    items = [item for _, its in corpus for item in its]
    fields = {
        "transcript_words": _stats(transcript_words),
        "segment_counts": _stats(segment_counts),
        "keyframe_counts": _stats(keyframe_counts),
    }
    if items:
        fields["question_words"] = _stats(
            [_word_count(i.reference_question) for i in items])
        fields["answer_words"] = _stats([_word_count(i.answer) for i in items])
        distractor_words = [_word_count(d) for i in items for d in i.distractors]
        if distractor_words:
            fields["distractor_words"] = _stats(distractor_words)
        fields["choice_counts"] = _stats([i.choice_count for i in items])
    return CorpusStats(fields=fields)
