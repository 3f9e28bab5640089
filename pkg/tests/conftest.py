import json
from pathlib import Path

import pytest

from lectureqg.llmclient import ChatClient, ModelConfig
from lectureqg.stubprov import scripted_provider

SEGMENT_TEXTS = [
    "welcome everyone to the lecture on neural networks",
    "today we will cover activation functions in depth",
    "a common activation for convolutional neural networks is relu",
    "anything positive gets passed on and anything negative gets set to zero",
    "think of relu almost like a thresholding function",
    "next we discuss pooling layers and downsampling",
    "max pooling keeps the largest value in each region",
    "this reduces the spatial size of the feature maps",
    "finally we combine these layers into a full network",
    "that concludes the overview for today",
]

CAPTIONS = [
    "Slide showing the course title and lecture outline.",
    "Slide with the ReLU activation graph g(z) = max(0, z).",
    "Slide describing max pooling over feature maps.",
]


def write_lecture(root: Path, lecture_id: str = "lec1",
                  quiz_rows: list[dict] | None = None,
                  captions: bool = True) -> Path:
    lecture_dir = root / lecture_id
    lecture_dir.mkdir(parents=True, exist_ok=True)
    with open(lecture_dir / "transcript.jsonl", "w", encoding="utf-8") as f:
        for i, text in enumerate(SEGMENT_TEXTS):
            f.write(json.dumps({"index": i + 1, "start_s": 10.0 * i,
                                "end_s": 10.0 * (i + 1), "text": text}) + "\n")
    with open(lecture_dir / "keyframes.jsonl", "w", encoding="utf-8") as f:
        for j, cap in enumerate(CAPTIONS):
            f.write(json.dumps({
                "index": j + 1, "timestamp_s": 40.0 * j,
                "image_ref": f"frames/{40 * j}.png",
                "phash": [0] * 64,
                "caption": cap if captions else "",
            }) + "\n")
    (lecture_dir / "lecture.json").write_text(json.dumps({
        "course": "test-course",
        "duration_s": 100.0,
        "alignment": {"1": [1, 2, 3, 4], "2": [5, 6, 7, 8], "3": [9, 10]},
    }), encoding="utf-8")
    if quiz_rows is None:
        quiz_rows = [
            {"id": "q1", "timestamp_s": 32.0, "answer": "relu",
             "reference_question": "which activation function is common in cnns",
             "distractors": ["sigmoid", "tanh", "softmax"], "choice_count": 4},
            {"id": "q2", "timestamp_s": 65.0, "answer": "max pooling",
             "reference_question": "which pooling keeps the largest value",
             "distractors": ["average pooling", "min pooling"],
             "choice_count": 3},
        ]
    with open(lecture_dir / "quiz.jsonl", "w", encoding="utf-8") as f:
        for row in quiz_rows:
            f.write(json.dumps(row) + "\n")
    return lecture_dir


def write_corpus(root: Path, lectures: list[str] = ("lec1",), **kwargs) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for lecture_id in lectures:
        write_lecture(root, lecture_id, **kwargs)
    (root / "manifest.json").write_text(json.dumps(
        {"course": "test-course", "lectures": list(lectures)}),
        encoding="utf-8")
    return root


@pytest.fixture
def corpus_root(tmp_path):
    return write_corpus(tmp_path / "corpus")


def make_stub_client(provider=scripted_provider, cache_dir=None,
                     model="stub"):
    return ChatClient(ModelConfig(model=model), cache_dir=cache_dir,
                      provider=provider)


@pytest.fixture
def stub_client():
    return make_stub_client()
