import json
import random
from pathlib import Path

import pytest

from factgraph.errors import EmptyDocument, ScoringFailed
from factgraph.evalkit import (
    MockScorer,
    chunk_document,
    score_pair,
    split_sentences,
    whitespace_tokens,
)

FIXTURES = Path(__file__).parent / "fixtures"


def sentence(index: int, tokens: int) -> str:
    words = [f"S{index}"] + [f"w{j}" for j in range(tokens - 1)]
    return " ".join(words) + "."


class TestSplitSentences:
    def test_plain_sentences(self):
        text = "The park opened. Visitors arrived early. Gates closed at dusk."
        assert split_sentences(text) == [
            "The park opened.",
            "Visitors arrived early.",
            "Gates closed at dusk.",
        ]

    def test_abbreviations_do_not_split(self):
        text = "Dr. Smith arrived. Mrs. Jones left."
        assert split_sentences(text) == ["Dr. Smith arrived.", "Mrs. Jones left."]

    def test_decimals_do_not_split(self):
        text = "The rate was 3.14 percent. Everyone cheered."
        assert split_sentences(text) == [
            "The rate was 3.14 percent.",
            "Everyone cheered.",
        ]

    def test_closing_quotes_stay_attached(self):
        text = 'She said "stop." Then she left.'
        assert split_sentences(text) == ['She said "stop."', "Then she left."]

    def test_question_and_exclamation(self):
        text = "Really? Yes! It happened."
        assert split_sentences(text) == ["Really?", "Yes!", "It happened."]

    def test_initials(self):
        text = "J. Smith signed the deal. The board approved."
        assert split_sentences(text) == [
            "J. Smith signed the deal.",
            "The board approved.",
        ]

    def test_internal_whitespace_collapsed(self):
        text = "One   two\nthree. Four five."
        assert split_sentences(text) == ["One two three.", "Four five."]

    def test_empty_text(self):
        assert split_sentences("   ") == []


class TestChunkDocument:
    def test_greedy_packing_worked_example(self):
        doc = " ".join([sentence(1, 300), sentence(2, 200), sentence(3, 100)])
        chunks = chunk_document(doc, 400, whitespace_tokens)
        assert len(chunks) == 2
        assert whitespace_tokens(chunks[0]) == 300
        assert whitespace_tokens(chunks[1]) == 300  # 200 + 100 packed together

    def test_oversize_sentence_is_own_chunk(self):
        doc = sentence(1, 600)
        chunks = chunk_document(doc, 400, whitespace_tokens)
        assert len(chunks) == 1
        assert whitespace_tokens(chunks[0]) == 600

    def test_everything_fits_one_chunk(self):
        doc = " ".join([sentence(1, 10), sentence(2, 10)])
        assert len(chunk_document(doc, 400, whitespace_tokens)) == 1

    def test_empty_document_raises(self):
        with pytest.raises(EmptyDocument):
            chunk_document("  ", 400, whitespace_tokens)

    def test_budget_must_be_positive(self):
        with pytest.raises(ValueError):
            chunk_document("Some text.", 0, whitespace_tokens)

    def test_reconstruction_and_budget_on_fixture_corpus(self):
        budget = 40
        rows = [
            json.loads(line)
            for line in (FIXTURES / "chunker50.jsonl").read_text("utf-8").splitlines()
        ]
        assert len(rows) == 50
        for row in rows:
            sentences = split_sentences(row["doc"])
            chunks = chunk_document(row["doc"], budget, whitespace_tokens)
            assert " ".join(chunks) == " ".join(sentences)
            for chunk in chunks:
                chunk_sentences = whitespace_tokens(chunk)
                if chunk_sentences > budget:
                    # Only the oversize-singleton exception may exceed it.
                    assert chunk in sentences

    def test_random_docs_reconstruction(self):
        rng = random.Random(77)
        for _ in range(30):
            sentences = [
                sentence(i, rng.randint(1, 60)) for i in range(rng.randint(1, 12))
            ]
            doc = " ".join(sentences)
            chunks = chunk_document(doc, 50, whitespace_tokens)
            assert " ".join(chunks) == doc


class PerChunkScorer:
    """Fixture scorer with a deterministic per-chunk value."""

    name = "per-chunk"

    def __init__(self):
        self.seen = []

    def score(self, doc, claim):
        self.seen.append(doc)
        return (hash((doc, claim)) % 997) / 996.0

    def token_count(self, text):
        return whitespace_tokens(text)


class TestScorePair:
    def test_max_aggregation(self):
        class Fixed:
            name = "fixed"
            values = iter([0.3, 0.9, 0.5])

            def score(self, doc, claim):
                return next(self.values)

            def token_count(self, text):
                return whitespace_tokens(text)

        doc = " ".join([sentence(1, 40), sentence(2, 40), sentence(3, 40)])
        assert score_pair(Fixed(), doc, "claim", budget=40) == 0.9

    def test_single_chunk_identity(self):
        scorer = MockScorer()
        doc = sentence(1, 10)
        assert score_pair(scorer, doc, "claim", budget=400) == scorer.score(doc, "claim")

    def test_equals_independent_recomputation(self):
        scorer = PerChunkScorer()
        doc = " ".join(sentence(i, 30) for i in range(6))
        got = score_pair(scorer, doc, "the claim", budget=64)
        chunks = chunk_document(doc, 64, whitespace_tokens)
        reference = PerChunkScorer()
        expected = max(reference.score(chunk, "the claim") for chunk in chunks)
        assert got == expected

    def test_scorer_failure_wrapped(self):
        class Broken:
            name = "broken"

            def score(self, doc, claim):
                raise RuntimeError("nope")

            def token_count(self, text):
                return whitespace_tokens(text)

        with pytest.raises(ScoringFailed):
            score_pair(Broken(), "Some text here.", "claim", budget=40)

    def test_out_of_range_score_rejected(self):
        class TooBig:
            name = "toobig"

            def score(self, doc, claim):
                return 1.5

            def token_count(self, text):
                return whitespace_tokens(text)

        with pytest.raises(ScoringFailed):
            score_pair(TooBig(), "Some text here.", "claim", budget=40)

    def test_whitespace_fallback_warns(self):
        class NoCounter:
            name = "nocounter"

            def score(self, doc, claim):
                return 0.5

        with pytest.warns(UserWarning):
            score_pair(NoCounter(), "Some text here.", "claim", budget=40)
