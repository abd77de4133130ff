"""Connected-reasoning dataset construction and metrics.

Positive evaluation records arrive with one or more evidence sets, each a
minimal sentence set sufficient to verify the claim.  The negative twin of
a record deletes a randomly chosen hitting set: at least one sentence from
every evidence set, so no evidence set survives intact.  A model reasons
"connectedly" on a pair when it accepts the intact document and rejects
the corrupted one.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence


@dataclass(frozen=True)
class EvidenceRecord:
    """A claim with document sentences and evidence sentence-index sets."""

    doc_id: str
    sentences: tuple[str, ...]
    claim: str
    evidence_sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        if not self.sentences:
            raise ValueError("record needs at least one sentence")
        if not self.claim:
            raise ValueError("record needs a claim")
        if not self.evidence_sets:
            raise ValueError("record needs at least one evidence set")
        for ev in self.evidence_sets:
            if not ev:
                raise ValueError("evidence sets must be non-empty")
            for idx in ev:
                if not 0 <= idx < len(self.sentences):
                    raise ValueError(f"evidence index {idx} out of range")

    @classmethod
    def from_dict(cls, data: dict) -> "EvidenceRecord":
        return cls(
            doc_id=str(data["doc_id"]),
            sentences=tuple(data["sentences"]),
            claim=data["claim"],
            evidence_sets=tuple(frozenset(ev) for ev in data["evidence_sets"]),
        )

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sentences": list(self.sentences),
            "claim": self.claim,
            "evidence_sets": [sorted(ev) for ev in self.evidence_sets],
        }

    def doc_text(self) -> str:
        return " ".join(self.sentences)


@dataclass(frozen=True)
class CorePair:
    """Intact/corrupted document pair sharing one claim."""

    doc_id: str
    claim: str
    positive_doc: str
    negative_doc: str
    removed: frozenset[int]

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "claim": self.claim,
            "positive_doc": self.positive_doc,
            "negative_doc": self.negative_doc,
            "removed": sorted(self.removed),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorePair":
        return cls(
            doc_id=str(data["doc_id"]),
            claim=data["claim"],
            positive_doc=data["positive_doc"],
            negative_doc=data["negative_doc"],
            removed=frozenset(data["removed"]),
        )


@dataclass
class CoreBuildResult:
    pairs: list[CorePair] = field(default_factory=list)
    skipped: int = 0


def _record_rng(seed: int, doc_id: str) -> random.Random:
    material = f"{seed}\x1f{doc_id}".encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _random_hitting_set(
    evidence_sets: Sequence[frozenset[int]], rng: random.Random
) -> frozenset[int]:
    """Random-greedy hitting set: hit a random uncovered set per round."""
    removed: set[int] = set()
    while True:
        uncovered = [ev for ev in evidence_sets if not (ev & removed)]
        if not uncovered:
            return frozenset(removed)
        target = uncovered[rng.randrange(len(uncovered))]
        removed.add(sorted(target)[rng.randrange(len(target))])


def build_core_dataset(
    records: Iterable[EvidenceRecord], seed: int
) -> CoreBuildResult:
    """Corrupt each eligible record into an intact/corrupted pair.

    Records are eligible only when every evidence set has at least two
    sentences; one sentence per set survives the deletion, so the corrupted
    document stays on topic while no set remains complete.  Ineligible
    records are skipped and counted.
    """
    result = CoreBuildResult()
    for record in records:
        if any(len(ev) < 2 for ev in record.evidence_sets):
            result.skipped += 1
            continue
        rng = _record_rng(seed, record.doc_id)
        removed = _random_hitting_set(record.evidence_sets, rng)
        negative = " ".join(
            s for i, s in enumerate(record.sentences) if i not in removed
        )
        result.pairs.append(
            CorePair(
                doc_id=record.doc_id,
                claim=record.claim,
                positive_doc=record.doc_text(),
                negative_doc=negative,
                removed=removed,
            )
        )
    return result


@dataclass(frozen=True)
class CoreMetrics:
    accuracy: float
    precision: Optional[float]  # None when no positive doc cleared theta
    connected: int
    positive_hits: int
    total: int

    def to_dict(self) -> dict:
        return {
            "accuracy_core": self.accuracy,
            "precision_core": self.precision,
            "connected": self.connected,
            "positive_hits": self.positive_hits,
            "total": self.total,
        }


def core_metrics(
    pair_scores: Sequence[tuple[float, float]], theta: float
) -> CoreMetrics:
    """Connected-reasoning accuracy and precision at a fixed threshold.

    A pair counts as connected when the intact document scores at or above
    theta while the corrupted one falls below it.  Accuracy divides by all
    pairs; precision divides by pairs whose intact document cleared theta,
    and is undefined (None) when none did.
    """
    if not pair_scores:
        raise ValueError("pair_scores must be non-empty")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must be within [0, 1]")
    connected = 0
    positive_hits = 0
    for pos_score, neg_score in pair_scores:
        pos_ok = pos_score >= theta
        if pos_ok:
            positive_hits += 1
        if pos_ok and neg_score < theta:
            connected += 1
    accuracy = connected / len(pair_scores)
    precision = connected / positive_hits if positive_hits else None
    return CoreMetrics(
        accuracy=accuracy,
        precision=precision,
        connected=connected,
        positive_hits=positive_hits,
        total=len(pair_scores),
    )


def load_evidence_jsonl(path) -> list[EvidenceRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(EvidenceRecord.from_dict(json.loads(line)))
    return records
