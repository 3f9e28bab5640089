"""HTTP service backing the authoring UI.

All endpoints live under /api/v1. The service only mutates corpus files via
save-question, which appends to the lecture's quiz.jsonl.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .context import ContextError, ContextStrategy
from .corpus import (BANNED_ANSWERS, CorpusError, QuizItem, load_lecture,
                     quiz_item_row)
from .llmclient import ChatClient, TransportError
from .qgen import GenerationError, generate_questions
from .runner import _bundle_row, _qset_row, build_bundle, score_questions

_quiz_write_lock = threading.Lock()


class GenerateRequest(BaseModel):
    lecture_id: str
    timestamp_s: float
    answer: str
    strategy: str = "CoT+Rewrite(transcript)"


class SaveQuestionRequest(BaseModel):
    lecture_id: str
    timestamp_s: float
    answer: str
    question: str
    distractors: list[str] = Field(default_factory=list)


def create_app(
    corpus_root: str | Path,
    client: ChatClient,
    nli_client=None,
    rquge_client=None,
    rule_best_k: int = 5,
    runs_dir: Optional[str | Path] = None,
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    corpus_root = Path(corpus_root)
    app = FastAPI(title="lectureqg")

    def manifest() -> dict:
        path = corpus_root / "manifest.json"
        if not path.exists():
            raise HTTPException(500, "corpus manifest missing")
        return json.loads(path.read_text(encoding="utf-8"))

    def get_lecture(lecture_id: str):
        if lecture_id not in manifest().get("lectures", []):
            raise HTTPException(404, f"unknown lecture {lecture_id!r}")
        try:
            return load_lecture(corpus_root / lecture_id,
                                manifest().get("course", ""))
        except CorpusError as exc:
            raise HTTPException(500, str(exc))

    @app.get("/api/v1/lectures")
    def list_lectures():
        out = []
        for lecture_id in manifest().get("lectures", []):
            lecture = get_lecture(lecture_id)
            quiz_path = corpus_root / lecture_id / "quiz.jsonl"
            n_quiz = (sum(1 for line in quiz_path.read_text(
                encoding="utf-8").splitlines() if line.strip())
                if quiz_path.exists() else 0)
            out.append({
                "id": lecture.id,
                "course": lecture.course,
                "duration_s": lecture.duration_s,
                "n_segments": len(lecture.segments),
                "n_keyframes": len(lecture.keyframes),
                "n_quiz": n_quiz,
            })
        return out

    @app.get("/api/v1/lectures/{lecture_id}")
    def lecture_detail(lecture_id: str):
        lecture = get_lecture(lecture_id)
        return {
            "id": lecture.id,
            "course": lecture.course,
            "duration_s": lecture.duration_s,
            "segments": [
                {"index": s.index, "start_s": s.start_s, "end_s": s.end_s,
                 "text": s.text}
                for s in lecture.segments
            ],
            "keyframes": [
                {"index": k.index, "timestamp_s": k.timestamp_s,
                 "image_ref": k.image_ref, "caption": k.caption}
                for k in lecture.keyframes
            ],
            "alignment": {str(k): v for k, v in lecture.alignment.items()},
        }

    @app.get("/api/v1/lectures/{lecture_id}/quiz")
    def lecture_quiz(lecture_id: str):
        get_lecture(lecture_id)  # 404 on unknown id
        quiz_path = corpus_root / lecture_id / "quiz.jsonl"
        if not quiz_path.exists():
            return []
        return [json.loads(line)
                for line in quiz_path.read_text(encoding="utf-8").splitlines()
                if line.strip()]

    @app.post("/api/v1/generate")
    def generate(req: GenerateRequest):
        lecture = get_lecture(req.lecture_id)
        answer = req.answer.strip()
        if not answer:
            raise HTTPException(400, "answer must be non-empty")
        if answer.lower() in BANNED_ANSWERS:
            raise HTTPException(400, f"answer {answer!r} is a banned "
                                "meaningless answer")
        if not 0 <= req.timestamp_s <= lecture.duration_s:
            raise HTTPException(
                400, f"timestamp {req.timestamp_s} outside lecture duration "
                f"{lecture.duration_s}")
        try:
            strategy = ContextStrategy.parse(req.strategy)
        except ContextError as exc:
            raise HTTPException(400, str(exc))
        item = QuizItem(
            id="adhoc",
            lecture_id=lecture.id,
            timestamp_s=req.timestamp_s,
            segment_index=lecture.resolve_timestamp(req.timestamp_s),
            answer=answer,
            reference_question="",
        )
        try:
            bundle = build_bundle(lecture, item, strategy, client, rule_best_k)
            qset = generate_questions(bundle, item, client)
        except (TransportError, GenerationError) as exc:
            raise HTTPException(
                502, f"provider failure: {exc}; retry once the provider "
                "is reachable")
        except ContextError as exc:
            raise HTTPException(400, str(exc))
        # no reference question for ad-hoc requests, so no NLI/ROUGE;
        # RQUGE (reference-free) runs when its endpoint is configured
        scores = score_questions(lecture, item, bundle, qset,
                                 nli_client=None, rquge_client=rquge_client)
        return {
            "bundle": _bundle_row(bundle),
            "candidates": _qset_row(qset)["candidates"],
            "rquge": scores.rquge or None,
            "segment_index": item.segment_index,
        }

    @app.post("/api/v1/save-question")
    def save_question(req: SaveQuestionRequest):
        lecture = get_lecture(req.lecture_id)
        answer = req.answer.strip()
        if not answer or answer.lower() in BANNED_ANSWERS:
            raise HTTPException(400, "invalid answer")
        if not req.question.strip():
            raise HTTPException(400, "question must be non-empty")
        if not 0 <= req.timestamp_s <= lecture.duration_s:
            raise HTTPException(400, "timestamp outside lecture duration")
        quiz_path = corpus_root / req.lecture_id / "quiz.jsonl"
        with _quiz_write_lock:
            existing = 0
            if quiz_path.exists():
                existing = sum(1 for line in quiz_path.read_text(
                    encoding="utf-8").splitlines() if line.strip())
            item = QuizItem(
                id=f"{req.lecture_id}-q{existing + 1}",
                lecture_id=req.lecture_id,
                timestamp_s=req.timestamp_s,
                segment_index=lecture.resolve_timestamp(req.timestamp_s),
                answer=answer,
                reference_question=req.question.strip(),
                distractors=req.distractors,
                choice_count=1 + len(req.distractors),
            )
            with open(quiz_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(quiz_item_row(item), ensure_ascii=False)
                        + "\n")
        return {"saved": quiz_item_row(item)}

    @app.get("/api/v1/runs")
    def list_runs():
        if runs_dir is None or not Path(runs_dir).is_dir():
            return []
        out = []
        for child in sorted(Path(runs_dir).iterdir()):
            if (child / "report.csv").exists():
                out.append({"name": child.name,
                            "report_csv": (child / "report.csv").read_text(
                                encoding="utf-8")})
        return out

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app
