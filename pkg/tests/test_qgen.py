import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lectureqg.context import ContextStrategy
from lectureqg.corpus import load_corpus
from lectureqg.qgen import (GenerationError, generate_questions,
                            parse_mcq_block, render_qgen_prompt)
from lectureqg.context import build_all_context, build_rule_context

from conftest import make_stub_client


WELL_FORMED = """Q1. What does ReLU do to negative values?
A) Sets them to zero
B) Doubles them
C) Leaves them unchanged
D) Negates them
Answer: A

Q2: Which layer follows convolution here?
A) Pooling
B) Softmax
Answer: A
"""


class TestParse:
    def test_well_formed_two_questions(self):
        candidates, diagnostics = parse_mcq_block(WELL_FORMED)
        assert [c.ordinal for c in candidates] == [1, 2]
        assert candidates[0].stem == "What does ReLU do to negative values?"
        assert candidates[0].options == [
            ("A", "Sets them to zero"), ("B", "Doubles them"),
            ("C", "Leaves them unchanged"), ("D", "Negates them")]
        assert candidates[0].answer_letter == "A"
        assert candidates[1].options == [("A", "Pooling"), ("B", "Softmax")]
        assert diagnostics == []

    def test_seven_blocks_all_parsed_caller_truncates(self):
        text = "\n".join(
            f"Q{i}. Question {i}?\nA) yes\nB) no\nAnswer: A"
            for i in range(1, 8))
        candidates, _ = parse_mcq_block(text)
        assert len(candidates) == 7

    def test_options_packed_on_one_line(self):
        text = "Q1. Pick one? A) alpha B) beta C) gamma\nAnswer: C"
        candidates, _ = parse_mcq_block(text)
        assert candidates[0].options == [
            ("A", "alpha"), ("B", "beta"), ("C", "gamma")]
        assert candidates[0].answer_letter == "C"

    def test_non_interrogative_flagged_but_kept(self):
        text = "Q1. Name the activation used.\nA) ReLU\nB) tanh\nAnswer: A"
        candidates, diagnostics = parse_mcq_block(text)
        assert len(candidates) == 1
        assert not candidates[0].interrogative
        assert any("not interrogative" in d for d in diagnostics)

    def test_prose_without_markers_yields_empty(self):
        candidates, _ = parse_mcq_block(
            "I cannot produce questions for this content, sorry.")
        assert candidates == []

    def test_out_of_order_labels_keep_prefix(self):
        text = "Q1. Pick?\nA) one\nC) three\nB) two\nAnswer: A"
        candidates, _ = parse_mcq_block(text)
        assert candidates[0].options == [("A", "one")]

    def test_windows_newlines(self):
        candidates, _ = parse_mcq_block(WELL_FORMED.replace("\n", "\r\n"))
        assert len(candidates) == 2

    def test_correct_answer_variant(self):
        text = "Q1. Pick?\nA) one\nB) two\nCorrect Answer: B"
        candidates, _ = parse_mcq_block(text)
        assert candidates[0].answer_letter == "B"

    @settings(max_examples=60, deadline=None)
    @given(st.text(alphabet="QA12.)?: \nabc", max_size=200))
    def test_never_raises_on_arbitrary_text(self, text):
        candidates, diagnostics = parse_mcq_block(text)
        for c in candidates:
            labels = [label for label, _ in c.options]
            assert labels == [chr(ord("A") + i) for i in range(len(labels))]

    def test_idempotent_on_same_input(self):
        first, _ = parse_mcq_block(WELL_FORMED)
        second, _ = parse_mcq_block(WELL_FORMED)
        assert first == second


class TestPrompt:
    def test_timestamp_line_only_for_all(self, corpus_root):
        [(lecture, items)] = load_corpus(corpus_root)
        bundle_all = build_all_context(lecture, items[0], "transcript")
        prompt_all = render_qgen_prompt(bundle_all, items[0])
        assert f"Timestamp: {items[0].segment_index}" in prompt_all
        bundle_rule = build_rule_context(lecture, items[0], 5)
        prompt_rule = render_qgen_prompt(bundle_rule, items[0])
        assert "Timestamp:" not in prompt_rule
        assert items[0].answer in prompt_rule


class TestGenerate:
    def test_stub_produces_five(self, corpus_root, stub_client):
        [(lecture, items)] = load_corpus(corpus_root)
        bundle = build_rule_context(lecture, items[0], 5)
        qset = generate_questions(bundle, items[0], stub_client)
        assert len(qset.candidates) == 5
        assert qset.strategy_label == "Rule-5(transcript)"
        for c in qset.candidates:
            assert len(c.options) == 4
            assert c.answer_letter == "A"

    def test_deterministic_across_calls(self, corpus_root, stub_client):
        [(lecture, items)] = load_corpus(corpus_root)
        bundle = build_rule_context(lecture, items[0], 5)
        a = generate_questions(bundle, items[0], stub_client)
        b = generate_questions(bundle, items[0], stub_client)
        assert a.raw_response == b.raw_response
        assert a.cache_key == b.cache_key

    def test_retry_nudge_then_success(self, corpus_root):
        [(lecture, items)] = load_corpus(corpus_root)
        bundle = build_rule_context(lecture, items[0], 5)
        calls = []

        def provider(prompt, images):
            calls.append(prompt)
            if len(calls) == 1:
                return "no questions here"
            return "Q1. Works now?\nA) yes indeed\nB) clearly not\nAnswer: A"

        qset = generate_questions(bundle, items[0],
                                  make_stub_client(provider=provider))
        assert len(calls) == 2
        assert "Reminder" in calls[1]
        assert qset.candidates[0].stem == "Works now?"

    def test_exhausted_retries_raise(self, corpus_root):
        [(lecture, items)] = load_corpus(corpus_root)
        bundle = build_rule_context(lecture, items[0], 5)
        client = make_stub_client(provider=lambda p, i: "still nothing")
        with pytest.raises(GenerationError, match=items[0].id):
            generate_questions(bundle, items[0], client)
