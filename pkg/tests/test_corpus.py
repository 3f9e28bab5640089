import json
import statistics

import pytest

from lectureqg.corpus import (CorpusError, corpus_stats, load_corpus,
                              save_corpus)

from conftest import SEGMENT_TEXTS, write_corpus, write_lecture


def test_load_resolves_timestamp_by_containment(corpus_root):
    [(lecture, items)] = load_corpus(corpus_root)
    assert items[0].timestamp_s == 32.0
    assert items[0].segment_index == 4  # [30, 40) contains 32
    assert items[1].segment_index == 7


def test_boundary_timestamp_resolves_to_earlier_segment(corpus_root):
    [(lecture, _)] = load_corpus(corpus_root)
    # 10.0 is the boundary between segments 1 and 2
    assert lecture.resolve_timestamp(10.0) == 1


def test_three_segment_fixture_timestamp_12(tmp_path):
    root = tmp_path / "c"
    root.mkdir()
    lecture_dir = root / "lec"
    lecture_dir.mkdir()
    with open(lecture_dir / "transcript.jsonl", "w") as f:
        for i in range(3):
            f.write(json.dumps({"index": i + 1, "start_s": 10.0 * i,
                                "end_s": 10.0 * (i + 1),
                                "text": f"segment {i + 1}"}) + "\n")
    with open(lecture_dir / "quiz.jsonl", "w") as f:
        f.write(json.dumps({"id": "q", "timestamp_s": 12.0, "answer": "x",
                            "reference_question": "what is x"}) + "\n")
    (root / "manifest.json").write_text(json.dumps({"lectures": ["lec"]}))
    [(_, items)] = load_corpus(root)
    assert items[0].segment_index == 2


def test_banned_answer_rejected(tmp_path):
    root = write_corpus(tmp_path / "c", quiz_rows=[
        {"id": "q1", "timestamp_s": 5.0, "answer": "None of the Above",
         "reference_question": "pick one"}])
    with pytest.raises(CorpusError, match="banned-answer"):
        load_corpus(root)


def test_answer_containing_banned_phrase_is_allowed(tmp_path):
    root = write_corpus(tmp_path / "c", quiz_rows=[
        {"id": "q1", "timestamp_s": 5.0, "answer": "not a yes",
         "reference_question": "what kind of answer is it"}])
    [(_, items)] = load_corpus(root)
    assert items[0].answer == "not a yes"


def test_timestamp_outside_duration_rejected(tmp_path):
    root = write_corpus(tmp_path / "c", quiz_rows=[
        {"id": "q1", "timestamp_s": 500.0, "answer": "x",
         "reference_question": "what"}])
    with pytest.raises(CorpusError, match="duration"):
        load_corpus(root)


def test_missing_file_reports_lecture_and_path(tmp_path):
    root = tmp_path / "c"
    root.mkdir()
    (root / "lec1").mkdir()
    (root / "manifest.json").write_text(json.dumps({"lectures": ["lec1"]}))
    with pytest.raises(CorpusError, match=r"lec1.*transcript\.jsonl"):
        load_corpus(root)


def test_segment_index_passthrough(tmp_path):
    root = write_corpus(tmp_path / "c", quiz_rows=[
        {"id": "q1", "timestamp_s": 32.0, "segment_index": 2, "answer": "x",
         "reference_question": "what"}])
    [(_, items)] = load_corpus(root)
    assert items[0].segment_index == 2


def test_noncontiguous_segment_index_rejected(tmp_path):
    root = tmp_path / "c"
    root.mkdir()
    lecture_dir = root / "lec"
    lecture_dir.mkdir()
    with open(lecture_dir / "transcript.jsonl", "w") as f:
        f.write(json.dumps({"index": 1, "start_s": 0, "end_s": 1,
                            "text": "a"}) + "\n")
        f.write(json.dumps({"index": 3, "start_s": 1, "end_s": 2,
                            "text": "b"}) + "\n")
    (root / "manifest.json").write_text(json.dumps({"lectures": ["lec"]}))
    with pytest.raises(CorpusError, match="contiguous"):
        load_corpus(root)


def test_round_trip_byte_identical(corpus_root, tmp_path):
    corpus = load_corpus(corpus_root)
    out1 = tmp_path / "out1"
    out2 = tmp_path / "out2"
    save_corpus(corpus, out1)
    save_corpus(load_corpus(out1), out2)
    for rel in ["manifest.json", "lec1/transcript.jsonl",
                "lec1/keyframes.jsonl", "lec1/quiz.jsonl", "lec1/lecture.json"]:
        assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes()


def test_resolution_total_and_monotone(corpus_root):
    [(lecture, _)] = load_corpus(corpus_root)
    previous = 0
    for tenth in range(0, 1001):
        t = tenth / 10.0
        idx = lecture.resolve_timestamp(t)
        assert 1 <= idx <= len(lecture.segments)
        assert idx >= previous
        previous = idx


def naive_stats(values):
    mean = sum(values) / len(values)
    std = (sum((v - mean) ** 2 for v in values) / len(values)) ** 0.5
    ordered = sorted(values)
    n = len(ordered)
    median = (ordered[n // 2] if n % 2
              else (ordered[n // 2 - 1] + ordered[n // 2]) / 2)
    return mean, std, min(values), median, max(values)


def test_stats_match_bruteforce(corpus_root):
    corpus = load_corpus(corpus_root)
    stats = corpus_stats(corpus)
    question_words = [len(i.reference_question.split())
                      for _, items in corpus for i in items]
    mean, std, mn, med, mx = naive_stats(question_words)
    qw = stats.fields["question_words"]
    assert qw.mean == pytest.approx(mean)
    assert qw.std == pytest.approx(std)
    assert (qw.min, qw.median, qw.max) == (mn, med, mx)
    tw = stats.fields["transcript_words"]
    expected_words = sum(len(t.split()) for t in SEGMENT_TEXTS)
    assert tw.mean == expected_words
    assert tw.std == 0.0


def test_stats_simple_lists():
    # questions with word counts [3, 5, 7] -> mean 5.0 median 5.0 min 3 max 7
    assert statistics.fmean([3, 5, 7]) == 5.0
    mean, std, mn, med, mx = naive_stats([3, 5, 7])
    assert (mean, med, mn, mx) == (5.0, 5.0, 3, 7)


def test_empty_corpus_errors():
    with pytest.raises(CorpusError):
        corpus_stats([])
