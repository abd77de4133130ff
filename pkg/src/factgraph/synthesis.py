"""Synthetic grounded-factuality sample generation.

Two pipelines produce labeled (document, claim) pairs:

* the document pipeline extracts a context graph per document, drops
  cyclic components, enumerates multi-hop sub-graphs of the configured
  shape, writes one claim per sub-graph, and corrupts the document by
  removing one sub-graph relation -- yielding strict 1:1
  grounded/ungrounded pairs sharing the claim;
* the QA pipeline converts question/answer pairs to declarative claims,
  corrupts a seeded quota of them into negatives by removing a mapped
  relation from the document, treats unanswerable questions as negatives
  directly, and optionally filters with a baseline NLI scorer to keep
  hard examples.

All randomness flows from explicit seeds; with the mock backend the
output is byte-stable.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import (
    AllRejected,
    ContractViolation,
    CorruptionFailed,
    EmptyCompletion,
    EmptyGraph,
)
from .graphkit import (
    ContextGraph,
    SubGraph,
    Triple,
    _stable_rng,
    cluster_components,
    entity_key,
    enumerate_subgraphs,
    is_acyclic,
    normalize_text,
    pick_edge,
    sample_subgraphs,
)
from .hopscan import map_claim_subgraph
from .llm import LlmClient
from .promptgen import parse_single_text

SOURCE_CG2C_DOC = "cg2c_doc"
SOURCE_HOTPOTQA = "hotpotqa"
SOURCE_MUSIQUE = "musique"

GROUNDED = "Grounded"
UNGROUNDED = "Ungrounded"

POLICY_DROP_IF_CORRECT = "drop_if_correct"
POLICY_DROP_IF_INCORRECT = "drop_if_incorrect"
POLICY_OFF = "off"
NLI_POLICIES = (POLICY_DROP_IF_CORRECT, POLICY_DROP_IF_INCORRECT, POLICY_OFF)


@dataclass
class SampleRecord:
    """One labeled (document, claim) training sample."""

    id: str
    doc: str
    claim: str
    label: int
    source: str
    hops: Optional[int] = None
    pair_id: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")
        if not self.doc or not self.claim:
            raise ValueError("doc and claim must be non-empty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "doc": self.doc,
            "claim": self.claim,
            "label": self.label,
            "source": self.source,
            "hops": self.hops,
            "pair_id": self.pair_id,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleRecord":
        return cls(
            id=data["id"],
            doc=data["doc"],
            claim=data["claim"],
            label=int(data["label"]),
            source=data["source"],
            hops=data.get("hops"),
            pair_id=data.get("pair_id"),
            meta=data.get("meta", {}),
        )


@dataclass
class MhqaRecord:
    """One multi-hop QA source record."""

    id: str
    doc: str
    question: str
    answer: str
    supporting_sentences: list[str] = field(default_factory=list)
    answerable: bool = True
    source: str = SOURCE_HOTPOTQA
    declared_hops: Optional[int] = None

    def __post_init__(self):
        for sentence in self.supporting_sentences:
            if sentence not in self.doc:
                raise ValueError(
                    f"supporting sentence not found verbatim in doc ({self.id})"
                )

    @classmethod
    def from_dict(cls, data: dict) -> "MhqaRecord":
        return cls(
            id=str(data["id"]),
            doc=data["doc"],
            question=data["question"],
            answer=data["answer"],
            supporting_sentences=list(data.get("supporting_sentences", [])),
            answerable=bool(data.get("answerable", True)),
            source=data.get("source", SOURCE_HOTPOTQA),
            declared_hops=data.get("declared_hops"),
        )


@dataclass
class SynthesisParams:
    hops: tuple[int, ...] = (3, 4)
    shape: str = "path"
    max_subgraphs_per_doc: int = 2
    corrupt_fraction: float = 0.18
    nli_policy_hotpotqa: str = POLICY_DROP_IF_CORRECT
    nli_policy_musique: str = POLICY_DROP_IF_CORRECT
    seed: int = 0


@dataclass
class GenResult:
    samples: list[SampleRecord] = field(default_factory=list)
    counts: Counter = field(default_factory=Counter)

    def sorted_samples(self) -> list[SampleRecord]:
        return sorted(self.samples, key=lambda r: r.id)


def qa_to_claim(record: MhqaRecord, client: LlmClient) -> str:
    """Question/answer pair -> single declarative claim sentence."""
    if not record.question or not record.answer:
        raise ContractViolation("question and answer must be non-empty")
    text = client.complete(
        "qa_to_claim", {"QUESTION": record.question, "ANSWER": record.answer}
    )
    return parse_single_text(text)


def corrupt_document(doc: str, triple: Triple, client: LlmClient) -> str:
    """Rewrite the document with the triple's relation removed."""
    doc_cf = normalize_text(doc).casefold()
    for endpoint in (triple.head, triple.tail):
        if entity_key(endpoint) not in doc_cf:
            raise ContractViolation(
                f"entity {endpoint!r} does not occur in the document"
            )
    text = client.complete(
        "relation_removal",
        {"ENTITIES": f"{triple.head}, {triple.tail}", "SENTENCES": doc},
    )
    rewritten = parse_single_text(text)
    if rewritten.strip() == doc.strip():
        raise CorruptionFailed("rewrite returned the document unchanged")
    return rewritten


def nli_map(label: str) -> str:
    """3-way NLI label -> binary groundedness."""
    if label == "Entailment":
        return GROUNDED
    if label in ("Contradiction", "Neutral"):
        return UNGROUNDED
    raise ValueError(f"unknown NLI label {label!r}")


@dataclass
class NliFilterResult:
    kept: list[SampleRecord] = field(default_factory=list)
    dropped: int = 0
    flagged: int = 0


def nli_filter(
    samples: Sequence[SampleRecord], nli_scorer, policy: str
) -> NliFilterResult:
    """Drop samples that a baseline NLI scorer gets right (or wrong).

    Labels and texts are never altered; filtering only changes membership.
    Scorer failures keep the record and flag it in its metadata.
    """
    if policy not in (POLICY_DROP_IF_CORRECT, POLICY_DROP_IF_INCORRECT):
        raise ValueError(f"unknown filter policy {policy!r}")
    result = NliFilterResult()
    for sample in samples:
        try:
            raw = nli_scorer.nli_label(sample.doc, sample.claim)
            mapped = nli_map(raw)
        except Exception:
            sample.meta = dict(sample.meta, nli_flagged=True)
            result.flagged += 1
            result.kept.append(sample)
            continue
        predicted_label = 1 if mapped == GROUNDED else 0
        correct = predicted_label == sample.label
        drop = correct if policy == POLICY_DROP_IF_CORRECT else not correct
        if drop:
            result.dropped += 1
        else:
            result.kept.append(sample)
    return result


def _claim_for_subgraph(client: LlmClient, doc: str, sub: SubGraph) -> str:
    entities = ", ".join(sub.node_displays())
    text = client.complete(
        "claim_from_graph", {"ENTITIES": entities, "SENTENCES": doc}
    )
    return parse_single_text(text)


def gen_doc_pairs(
    doc_id: str, doc_text: str, params: SynthesisParams, client: LlmClient
) -> GenResult:
    """Document-only pipeline: 1:1 grounded/ungrounded pairs per sub-graph."""
    if not doc_text.strip():
        raise ContractViolation("document must be non-empty")
    result = GenResult()
    try:
        graph = client.extract_doc_graph(doc_text, doc_id)
    except (AllRejected, EmptyGraph):
        result.counts["dropped_ill_formatted_graph"] += 1
        return result
    acyclic_edges: list[Triple] = []
    for component in cluster_components(graph):
        if is_acyclic(component):
            acyclic_edges.extend(component.edges)
        else:
            result.counts["cyclic_components_filtered"] += 1
    if not acyclic_edges:
        return result
    forest = ContextGraph.from_triples(acyclic_edges, doc_id)

    for hops in params.hops:
        candidates = enumerate_subgraphs(forest, hops, params.shape)
        chosen = sample_subgraphs(
            candidates,
            params.max_subgraphs_per_doc,
            params.seed,
            f"{doc_id}:{hops}:{params.shape}",
        )
        for index, sub in enumerate(chosen):
            pair_id = f"{doc_id}:{params.shape}{hops}:{index}"
            try:
                claim = _claim_for_subgraph(client, doc_text, sub)
                removed = pick_edge(sub, params.seed)
                negative_doc = corrupt_document(doc_text, removed, client)
            except EmptyCompletion:
                result.counts["dropped_ill_formatted_claim"] += 1
                continue
            except CorruptionFailed:
                result.counts["dropped_corruption_failed"] += 1
                continue
            except ContractViolation:
                result.counts["dropped_corruption_precondition"] += 1
                continue
            meta = {
                "subgraph_edges": [t.to_dict() for t in sub.edges],
                "seed": params.seed,
            }
            result.samples.append(
                SampleRecord(
                    id=f"{pair_id}:pos",
                    doc=doc_text,
                    claim=claim,
                    label=1,
                    source=SOURCE_CG2C_DOC,
                    hops=sub.hops,
                    pair_id=pair_id,
                    meta=meta,
                )
            )
            result.samples.append(
                SampleRecord(
                    id=f"{pair_id}:neg",
                    doc=negative_doc,
                    claim=claim,
                    label=0,
                    source=SOURCE_CG2C_DOC,
                    hops=sub.hops,
                    pair_id=pair_id,
                    meta=dict(meta, removed_triple=removed.to_dict()),
                )
            )
            result.counts["positive"] += 1
            result.counts["negative"] += 1
    return result


def gen_doc_corpus(
    docs: Iterable[tuple[str, str]], params: SynthesisParams, client: LlmClient
) -> GenResult:
    """Run the document pipeline over a corpus of (doc_id, text)."""
    result = GenResult()
    for doc_id, doc_text in docs:
        result.counts["documents"] += 1
        per_doc = gen_doc_pairs(doc_id, doc_text, params, client)
        result.samples.extend(per_doc.samples)
        result.counts.update(per_doc.counts)
    result.samples = result.sorted_samples()
    return result


def _corrupt_mhqa_record(
    record: MhqaRecord, claim: str, params: SynthesisParams, client: LlmClient
) -> SampleRecord:
    """Turn one answerable QA record into an ungrounded sample."""
    support_graph = client.extract_sentence_graph(
        record.supporting_sentences, record.id
    )
    mapped = map_claim_subgraph(support_graph, claim, client)
    if not mapped.triples:
        raise EmptyGraph("claim mapped to no graph edges")
    removed = pick_edge(mapped.triples, params.seed)
    negative_doc = corrupt_document(record.doc, removed, client)
    return SampleRecord(
        id=f"{record.source}:{record.id}",
        doc=negative_doc,
        claim=claim,
        label=0,
        source=record.source,
        hops=record.declared_hops,
        meta={"removed_triple": removed.to_dict(), "seed": params.seed},
    )


def gen_mhqa_pairs(
    records: Sequence[MhqaRecord],
    params: SynthesisParams,
    client: LlmClient,
    nli_scorer=None,
) -> GenResult:
    """QA pipeline over HotpotQA-style and Musique-style records."""
    result = GenResult()
    hotpot: list[tuple[MhqaRecord, str]] = []
    musique: list[SampleRecord] = []

    for record in sorted(records, key=lambda r: r.id):
        result.counts[f"records_{record.source}"] += 1
        if record.source == SOURCE_MUSIQUE and record.declared_hops not in params.hops:
            result.counts["dropped_musique_hops"] += 1
            continue
        try:
            claim = qa_to_claim(record, client)
        except (EmptyCompletion, ContractViolation):
            result.counts["dropped_ill_formatted_claim"] += 1
            continue
        if record.source == SOURCE_HOTPOTQA:
            hotpot.append((record, claim))
        elif record.source == SOURCE_MUSIQUE:
            label = 1 if record.answerable else 0
            musique.append(
                SampleRecord(
                    id=f"{record.source}:{record.id}",
                    doc=record.doc,
                    claim=claim,
                    label=label,
                    source=record.source,
                    hops=record.declared_hops,
                )
            )
        else:
            result.counts["dropped_unknown_source"] += 1

    # Seeded quota of answerable records is corrupted into negatives;
    # the rest stay positives.
    eligible = [i for i, (record, _) in enumerate(hotpot) if record.answerable]
    quota = round(len(eligible) * params.corrupt_fraction)
    rng = _stable_rng(params.seed, "hotpot_corruption", str(len(eligible)))
    to_corrupt = set(rng.sample(eligible, quota)) if quota else set()

    hotpot_samples: list[SampleRecord] = []
    for i, (record, claim) in enumerate(hotpot):
        if i in to_corrupt:
            try:
                hotpot_samples.append(
                    _corrupt_mhqa_record(record, claim, params, client)
                )
            except (AllRejected, EmptyGraph, EmptyCompletion):
                result.counts["dropped_ill_formatted_corruption"] += 1
            except (CorruptionFailed, ContractViolation):
                result.counts["dropped_corruption_failed"] += 1
        else:
            hotpot_samples.append(
                SampleRecord(
                    id=f"{record.source}:{record.id}",
                    doc=record.doc,
                    claim=claim,
                    label=1 if record.answerable else 0,
                    source=record.source,
                )
            )

    for source, samples, policy in (
        (SOURCE_HOTPOTQA, hotpot_samples, params.nli_policy_hotpotqa),
        (SOURCE_MUSIQUE, musique, params.nli_policy_musique),
    ):
        if policy != POLICY_OFF and nli_scorer is not None:
            filtered = nli_filter(samples, nli_scorer, policy)
            result.counts[f"nli_dropped_{source}"] += filtered.dropped
            result.counts[f"nli_flagged_{source}"] += filtered.flagged
            samples = filtered.kept
        result.samples.extend(samples)

    for sample in result.samples:
        key = "positive" if sample.label == 1 else "negative"
        result.counts[key] += 1
        result.counts[f"{key}_{sample.source}"] += 1
    result.samples = result.sorted_samples()
    return result


def write_samples_jsonl(samples: Sequence[SampleRecord], fh) -> None:
    for sample in samples:
        fh.write(json.dumps(sample.to_dict(), ensure_ascii=False, sort_keys=True))
        fh.write("\n")


def load_mhqa_jsonl(path) -> list[MhqaRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(MhqaRecord.from_dict(json.loads(line)))
    return records
