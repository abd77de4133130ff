import io

import pytest

from factgraph.errors import ContractViolation, CorruptionFailed
from factgraph.evalkit import FixtureScorer
from factgraph.graphkit import Triple, largest_component_hops
from factgraph.synthesis import (
    GROUNDED,
    POLICY_DROP_IF_CORRECT,
    POLICY_DROP_IF_INCORRECT,
    UNGROUNDED,
    MhqaRecord,
    SampleRecord,
    SynthesisParams,
    corrupt_document,
    gen_doc_corpus,
    gen_doc_pairs,
    gen_mhqa_pairs,
    nli_filter,
    nli_map,
    qa_to_claim,
    write_samples_jsonl,
)

from conftest import load_jsonl, make_scripted_client

CHAIN_DOC = (
    "Alder Park funds Brook Bridge. Brook Bridge sponsors Cedar Museum. "
    "Cedar Museum overlooks Dune Harbor."
)
TRIANGLE_DOC = (
    "Elm Tower borders Fern Garden. Fern Garden borders Grove Library. "
    "Grove Library borders Elm Tower."
)
PROSE_DOC = "it rained all week. nothing else happened downtown."


def hotpot_record(record_id="h1", answerable=True):
    support = ["Alder Park funds Brook Bridge.", "Brook Bridge sponsors Cedar Museum."]
    doc = " ".join(support) + " Heath Station hosts Iris Garden."
    return MhqaRecord(
        id=record_id,
        doc=doc,
        question="Is Alder Park tied to Cedar Museum through Brook Bridge?",
        answer="Alder Park",
        supporting_sentences=support,
        answerable=answerable,
        source="hotpotqa",
    )


def musique_record(record_id="m1", answerable=True, hops=3):
    return MhqaRecord(
        id=record_id,
        doc="Juniper Market adjoins Kestrel Tower. Kestrel Tower funds Larch Park.",
        question="Which market adjoins Kestrel Tower?",
        answer="Juniper Market",
        supporting_sentences=[],
        answerable=answerable,
        source="musique",
        declared_hops=hops,
    )


class TestSampleRecord:
    def test_label_validated(self):
        with pytest.raises(ValueError):
            SampleRecord(id="x", doc="d", claim="c", label=2, source="cg2c_doc")

    def test_round_trip(self):
        record = SampleRecord(
            id="x", doc="d", claim="c", label=1, source="cg2c_doc",
            hops=3, pair_id="p", meta={"seed": 1},
        )
        assert SampleRecord.from_dict(record.to_dict()) == record


class TestMhqaRecord:
    def test_support_must_be_verbatim(self):
        with pytest.raises(ValueError):
            MhqaRecord(
                id="x", doc="Nothing here.", question="q", answer="a",
                supporting_sentences=["Missing sentence."],
            )


class TestQaToClaim:
    def test_header_echo_stripped(self, scripted_client):
        claim = qa_to_claim(hotpot_record(), scripted_client)
        assert not claim.lower().startswith("single declarative sentence")
        assert "Alder Park" in claim

    def test_empty_answer_rejected(self, scripted_client):
        record = hotpot_record()
        record.answer = ""
        with pytest.raises(ContractViolation):
            qa_to_claim(record, scripted_client)


class TestCorruptDocument:
    def test_removes_relation_sentence(self, scripted_client):
        triple = Triple(
            head="Alder Park", tail="Brook Bridge",
            relation="Alder Park funds Brook Bridge",
        )
        rewritten = corrupt_document(CHAIN_DOC, triple, scripted_client)
        assert rewritten != CHAIN_DOC
        assert "Alder Park funds Brook Bridge." not in rewritten
        assert "Cedar Museum overlooks Dune Harbor." in rewritten

    def test_unchanged_rewrite_raises(self, scripted_client):
        # The endpoints never share a sentence, so the scripted rewrite
        # removes nothing and the pipeline must flag the corruption.
        triple = Triple(head="Alder Park", tail="Cedar Museum", relation="linked")
        with pytest.raises(CorruptionFailed):
            corrupt_document(CHAIN_DOC, triple, scripted_client)

    def test_absent_endpoint_rejected(self, scripted_client):
        triple = Triple(head="Alder Park", tail="Zebra Plaza", relation="linked")
        with pytest.raises(ContractViolation):
            corrupt_document(CHAIN_DOC, triple, scripted_client)


class TestNliMap:
    def test_mapping(self):
        assert nli_map("Entailment") == GROUNDED
        assert nli_map("Contradiction") == UNGROUNDED
        assert nli_map("Neutral") == UNGROUNDED

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            nli_map("Maybe")


class TestNliFilter:
    def _samples(self):
        return [
            SampleRecord(id="a", doc="D1", claim="C1", label=1, source="hotpotqa"),
            SampleRecord(id="b", doc="D2", claim="C2", label=1, source="hotpotqa"),
        ]

    def test_drop_if_correct(self):
        scorer = FixtureScorer(
            labels={("D1", "C1"): "Entailment", ("D2", "C2"): "Neutral"}
        )
        result = nli_filter(self._samples(), scorer, POLICY_DROP_IF_CORRECT)
        assert [s.id for s in result.kept] == ["b"]
        assert result.dropped == 1

    def test_drop_if_incorrect(self):
        scorer = FixtureScorer(
            labels={("D1", "C1"): "Entailment", ("D2", "C2"): "Neutral"}
        )
        result = nli_filter(self._samples(), scorer, POLICY_DROP_IF_INCORRECT)
        assert [s.id for s in result.kept] == ["a"]

    def test_scorer_failure_keeps_and_flags(self):
        scorer = FixtureScorer(labels={})  # raises KeyError for everything
        result = nli_filter(self._samples(), scorer, POLICY_DROP_IF_CORRECT)
        assert len(result.kept) == 2
        assert result.flagged == 2
        assert all(s.meta.get("nli_flagged") for s in result.kept)

    def test_labels_and_texts_never_change(self):
        samples = self._samples()
        original = [(s.id, s.doc, s.claim, s.label) for s in samples]
        scorer = FixtureScorer(default_label="Contradiction")
        result = nli_filter(samples, scorer, POLICY_DROP_IF_INCORRECT)
        for sample in result.kept:
            assert (sample.id, sample.doc, sample.claim, sample.label) in original

    def test_empty_input(self):
        result = nli_filter([], FixtureScorer(default_label="Neutral"), POLICY_DROP_IF_CORRECT)
        assert result.kept == []
        assert result.dropped == 0


class TestGenDocPairs:
    def test_single_subgraph_doc_yields_linked_pair(self, scripted_client):
        params = SynthesisParams(hops=(3,), seed=5)
        result = gen_doc_pairs("doc1", CHAIN_DOC, params, scripted_client)
        assert len(result.samples) == 2
        positive, negative = sorted(result.samples, key=lambda s: -s.label)
        assert positive.label == 1 and negative.label == 0
        assert positive.claim == negative.claim
        assert positive.doc != negative.doc
        assert positive.pair_id == negative.pair_id
        assert positive.hops == 3

    def test_claim_includes_all_subgraph_nodes(self, scripted_client):
        params = SynthesisParams(hops=(3,), seed=5)
        result = gen_doc_pairs("doc1", CHAIN_DOC, params, scripted_client)
        positive = next(s for s in result.samples if s.label == 1)
        for name in ("Alder Park", "Brook Bridge", "Cedar Museum", "Dune Harbor"):
            assert name in positive.claim

    def test_hops_metadata_matches_stored_edges(self, scripted_client):
        params = SynthesisParams(hops=(3,), seed=5)
        result = gen_doc_pairs("doc1", CHAIN_DOC, params, scripted_client)
        for sample in result.samples:
            edges = {Triple.from_dict(e) for e in sample.meta["subgraph_edges"]}
            assert sample.hops == largest_component_hops(edges)

    def test_cyclic_only_doc_yields_nothing(self, scripted_client):
        params = SynthesisParams(hops=(3,), seed=5)
        result = gen_doc_pairs("doc2", TRIANGLE_DOC, params, scripted_client)
        assert result.samples == []
        assert result.counts["cyclic_components_filtered"] == 1

    def test_unextractable_doc_counted(self, scripted_client):
        params = SynthesisParams(hops=(3,), seed=5)
        result = gen_doc_pairs("doc3", PROSE_DOC, params, scripted_client)
        assert result.samples == []
        assert result.counts["dropped_ill_formatted_graph"] == 1

    def test_negative_meta_records_removed_triple(self, scripted_client):
        params = SynthesisParams(hops=(3,), seed=5)
        result = gen_doc_pairs("doc1", CHAIN_DOC, params, scripted_client)
        negative = next(s for s in result.samples if s.label == 0)
        removed = Triple.from_dict(negative.meta["removed_triple"])
        assert removed in {Triple.from_dict(e) for e in negative.meta["subgraph_edges"]}


class TestGenDocCorpus:
    def test_pair_integrity_and_determinism(self, fixtures_dir):
        docs = [(r["id"], r["doc"]) for r in load_jsonl(fixtures_dir / "docs20.jsonl")]
        params = SynthesisParams(seed=11)

        outputs = []
        for _ in range(2):
            client = make_scripted_client()
            result = gen_doc_corpus(docs, params, client)
            buffer = io.StringIO()
            write_samples_jsonl(result.sorted_samples(), buffer)
            outputs.append(buffer.getvalue())
        assert outputs[0] == outputs[1]

        client = make_scripted_client()
        result = gen_doc_corpus(docs, params, client)
        assert result.counts["positive"] == result.counts["negative"] > 0
        by_pair = {}
        for sample in result.samples:
            by_pair.setdefault(sample.pair_id, []).append(sample)
        for pair_id, pair in by_pair.items():
            assert len(pair) == 2, pair_id
            positive = next(s for s in pair if s.label == 1)
            negative = next(s for s in pair if s.label == 0)
            assert positive.claim == negative.claim
            assert positive.doc != negative.doc


class TestGenMhqaPairs:
    def test_musique_unanswerable_is_negative_with_unchanged_doc(self, scripted_client):
        record = musique_record(answerable=False)
        params = SynthesisParams(seed=0, corrupt_fraction=0.0)
        result = gen_mhqa_pairs([record], params, scripted_client)
        assert len(result.samples) == 1
        sample = result.samples[0]
        assert sample.label == 0
        assert sample.doc == record.doc

    def test_musique_hops_filter(self, scripted_client):
        records = [musique_record("m1", hops=2), musique_record("m2", hops=3)]
        params = SynthesisParams(seed=0)
        result = gen_mhqa_pairs(records, params, scripted_client)
        assert [s.id for s in result.samples] == ["musique:m2"]
        assert result.counts["dropped_musique_hops"] == 1

    def test_no_corruption_draw_yields_single_positive(self, scripted_client):
        params = SynthesisParams(seed=0, corrupt_fraction=0.0)
        result = gen_mhqa_pairs([hotpot_record()], params, scripted_client)
        assert len(result.samples) == 1
        assert result.samples[0].label == 1

    def test_full_corruption_replaces_positive(self, scripted_client):
        params = SynthesisParams(seed=0, corrupt_fraction=1.0)
        record = hotpot_record()
        result = gen_mhqa_pairs([record], params, scripted_client)
        assert len(result.samples) == 1
        sample = result.samples[0]
        assert sample.label == 0
        assert sample.doc != record.doc
        assert "removed_triple" in sample.meta

    def test_quota_matches_fraction(self, fixtures_dir):
        records = load_jsonl(fixtures_dir / "mhqa30.jsonl")
        parsed = [MhqaRecord.from_dict(r) for r in records]
        client = make_scripted_client()
        params = SynthesisParams(seed=7, corrupt_fraction=0.18)
        result = gen_mhqa_pairs(parsed, params, client)
        hotpot = [s for s in result.samples if s.source == "hotpotqa"]
        negatives = [s for s in hotpot if s.label == 0]
        eligible = 20
        assert len(negatives) == round(eligible * 0.18)

    def test_nli_filter_applied_per_policy(self, scripted_client):
        # Scorer always answers Neutral -> Ungrounded: correct only on
        # negatives, so drop_if_correct removes the unanswerable records.
        records = [
            musique_record("m1", answerable=True),
            musique_record("m2", answerable=False),
        ]
        params = SynthesisParams(seed=0, nli_policy_musique=POLICY_DROP_IF_CORRECT)
        scorer = FixtureScorer(default_label="Neutral")
        result = gen_mhqa_pairs(records, params, scripted_client, nli_scorer=scorer)
        assert [s.id for s in result.samples] == ["musique:m1"]
        assert result.counts["nli_dropped_musique"] == 1
