"""Hop-distribution analysis of claims over document context graphs.

For each grounded claim: map the claim onto its document's context graph,
keep only edges that exist in the graph, and bucket the edge count of the
mapped sub-graph's largest connected component into {1, 2, 3, 4, >=5}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import AllRejected, ContractViolation, EmptyGraph
from .graphkit import ContextGraph, Triple, _stable_rng, largest_component_hops
from .llm import LlmClient
from .promptgen import parse_triples_doc

BUCKETS = ("1", "2", "3", "4", "5+")


def bucket_for(hops: int) -> str:
    return str(hops) if hops < 5 else "5+"


@dataclass
class MappedSubgraph:
    """Claim-to-graph mapping result with the hallucination tally."""

    triples: list[Triple] = field(default_factory=list)
    hallucinated: int = 0


@dataclass
class HopHistogram:
    counts: dict[str, int] = field(default_factory=lambda: {b: 0 for b in BUCKETS})
    total: int = 0
    dropped: int = 0

    def add(self, hops: int) -> None:
        self.counts[bucket_for(hops)] += 1
        self.total += 1

    def percentages(self) -> dict[str, float]:
        if self.total == 0:
            return {b: 0.0 for b in BUCKETS}
        return {b: round(100.0 * c / self.total, 1) for b, c in self.counts.items()}

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "percentages": self.percentages(),
            "total": self.total,
            "dropped": self.dropped,
        }

    def to_table(self) -> str:
        pct = self.percentages()
        rows = [f"{'Hops':<10}{'Count':>8}{'Share':>9}"]
        for bucket in BUCKETS:
            label = f"{bucket}-hop" if bucket != "5+" else "≥ 5-hop"
            rows.append(f"{label:<10}{self.counts[bucket]:>8}{pct[bucket]:>8.1f}%")
        rows.append(f"{'total':<10}{self.total:>8}")
        rows.append(f"{'dropped':<10}{self.dropped:>8}")
        return "\n".join(rows)


def map_claim_subgraph(
    graph: ContextGraph, claim: str, client: LlmClient
) -> MappedSubgraph:
    """Select the graph edges a claim asserts.

    The model answers with candidate triples; only candidates exactly
    matching an edge of the graph (after normalization) survive, the rest
    are counted as hallucinated.  Raises :class:`AllRejected` when the
    completion parses to nothing.
    """
    if not graph.edges:
        raise EmptyGraph("cannot map a claim onto an empty graph")
    if not claim.strip():
        raise ContractViolation("claim must be non-empty")
    serialized = "\n".join(
        f"({t.head} {client.tuple_delimiter} {t.tail} "
        f"{client.tuple_delimiter} {t.relation})"
        for t in graph.edges
    )
    text = client.complete(
        "subgraph_map", {"TRIPLES": serialized, "SENTENCES": claim}
    )
    parsed = parse_triples_doc(text, client.tuple_delimiter, client.group_delimiter)
    known = graph.edge_keys()
    result = MappedSubgraph()
    seen = set()
    for triple in parsed.triples:
        key = triple.key()
        if key in known:
            if key not in seen:
                seen.add(key)
                result.triples.append(triple)
        else:
            result.hallucinated += 1
    return result


def hop_distribution(
    corpus: Sequence[tuple[str, str]],
    client: LlmClient,
    sample_size: int = 500,
    seed: int = 0,
) -> HopHistogram:
    """Hop histogram over a corpus of grounded (doc, claim) pairs.

    Documents are deduplicated and seeded-sampled down to ``sample_size``;
    each sampled document's graph is extracted once and reused for all of
    its claims.  Unmappable claims count as dropped, never as a bucket.
    """
    histogram = HopHistogram()
    doc_order: list[str] = []
    doc_claims: dict[str, list[str]] = {}
    for doc, claim in corpus:
        if doc not in doc_claims:
            doc_claims[doc] = []
            doc_order.append(doc)
        doc_claims[doc].append(claim)

    if sample_size < len(doc_order):
        rng = _stable_rng(seed, "hopscan_sample", str(len(doc_order)))
        chosen_idx = sorted(rng.sample(range(len(doc_order)), sample_size))
        sampled = [doc_order[i] for i in chosen_idx]
    else:
        sampled = doc_order

    graphs: dict[str, ContextGraph] = {}
    for position, doc in enumerate(sampled):
        doc_id = f"doc{position:05d}"
        try:
            graphs[doc] = client.extract_doc_graph(doc, doc_id)
        except (AllRejected, EmptyGraph):
            histogram.dropped += len(doc_claims[doc])
            continue
        for claim in doc_claims[doc]:
            try:
                mapped = map_claim_subgraph(graphs[doc], claim, client)
            except AllRejected:
                histogram.dropped += 1
                continue
            if not mapped.triples:
                histogram.dropped += 1
                continue
            histogram.add(largest_component_hops(mapped.triples))
    return histogram
