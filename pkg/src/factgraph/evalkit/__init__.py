"""Scoring, metrics, threshold tuning, and connected-reasoning evaluation."""

from .bootstrap import BootstrapResult, paired_bootstrap
from .chunking import chunk_document, score_pair, split_sentences
from .core import (
    CoreBuildResult,
    CoreMetrics,
    CorePair,
    EvidenceRecord,
    build_core_dataset,
    core_metrics,
    load_evidence_jsonl,
)
from .metrics import (
    ConfusionCounts,
    balanced_accuracy,
    confusion_from_scores,
    tune_threshold,
)
from .scorers import (
    CONTRADICTION,
    ENTAILMENT,
    NEUTRAL,
    NLI_LABELS,
    FixtureScorer,
    HttpScorer,
    MockScorer,
    Scorer,
    whitespace_tokens,
)

__all__ = [
    "BootstrapResult",
    "ConfusionCounts",
    "CoreBuildResult",
    "CoreMetrics",
    "CorePair",
    "EvidenceRecord",
    "FixtureScorer",
    "HttpScorer",
    "MockScorer",
    "Scorer",
    "balanced_accuracy",
    "build_core_dataset",
    "chunk_document",
    "confusion_from_scores",
    "core_metrics",
    "load_evidence_jsonl",
    "paired_bootstrap",
    "score_pair",
    "split_sentences",
    "tune_threshold",
    "whitespace_tokens",
    "ENTAILMENT",
    "CONTRADICTION",
    "NEUTRAL",
    "NLI_LABELS",
]
