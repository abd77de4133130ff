"""Scorer interface plus the offline mock and the HTTP client.

A scorer maps a (document, claim) pair to a grounding confidence in
``[0, 1]``.  It may optionally expose a 3-way NLI label and a token
counter; the chunker uses the latter when present.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Protocol, runtime_checkable

import requests

ENTAILMENT = "Entailment"
CONTRADICTION = "Contradiction"
NEUTRAL = "Neutral"
NLI_LABELS = (ENTAILMENT, CONTRADICTION, NEUTRAL)


@runtime_checkable
class Scorer(Protocol):
    name: str

    def score(self, doc: str, claim: str) -> float: ...


def whitespace_tokens(text: str) -> int:
    return len(text.split())


def _pair_digest(doc: str, claim: str) -> int:
    material = doc + "\x1f" + claim
    return int.from_bytes(hashlib.sha256(material.encode("utf-8")).digest()[:8], "big")


class MockScorer:
    """Deterministic content-hash scorer for offline runs and tests."""

    name = "mock"

    def score(self, doc: str, claim: str) -> float:
        return (_pair_digest(doc, claim) % 10_000) / 10_000.0

    def nli_label(self, doc: str, claim: str) -> str:
        return NLI_LABELS[_pair_digest(doc, claim) % 3]

    def token_count(self, text: str) -> int:
        return whitespace_tokens(text)


class FixtureScorer:
    """Scorer backed by explicit (doc, claim) -> value maps, for tests."""

    name = "fixture"

    def __init__(
        self,
        scores: Optional[dict[tuple[str, str], float]] = None,
        labels: Optional[dict[tuple[str, str], str]] = None,
        default_score: Optional[float] = None,
        default_label: Optional[str] = None,
    ):
        self._scores = dict(scores or {})
        self._labels = dict(labels or {})
        self._default_score = default_score
        self._default_label = default_label

    def score(self, doc: str, claim: str) -> float:
        if (doc, claim) in self._scores:
            return self._scores[(doc, claim)]
        if self._default_score is None:
            raise KeyError(f"no fixture score for claim {claim!r}")
        return self._default_score

    def nli_label(self, doc: str, claim: str) -> str:
        if (doc, claim) in self._labels:
            return self._labels[(doc, claim)]
        if self._default_label is None:
            raise KeyError(f"no fixture label for claim {claim!r}")
        return self._default_label

    def token_count(self, text: str) -> int:
        return whitespace_tokens(text)


class HttpScorer:
    """Client for the scoring microservice (POST /score).

    Batches are split client-side to respect the server-side cap.
    """

    def __init__(
        self,
        endpoint: str,
        max_batch: int = 32,
        timeout_s: float = 120.0,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.max_batch = max_batch
        self.timeout_s = timeout_s
        self.session = session or requests.Session()
        self.name = f"http:{self.endpoint}"

    def _post(self, payload: dict) -> dict:
        resp = self.session.post(
            f"{self.endpoint}/score", json=payload, timeout=self.timeout_s
        )
        resp.raise_for_status()
        return resp.json()

    def score_batch(self, pairs: list[tuple[str, str]]) -> list[float]:
        out: list[float] = []
        for start in range(0, len(pairs), self.max_batch):
            chunk = pairs[start : start + self.max_batch]
            data = self._post(
                {
                    "pairs": [{"doc": d, "claim": c} for d, c in chunk],
                    "mode": "confidence",
                }
            )
            out.extend(float(s) for s in data["scores"])
        return out

    def score(self, doc: str, claim: str) -> float:
        return self.score_batch([(doc, claim)])[0]

    def nli_label(self, doc: str, claim: str) -> str:
        data = self._post(
            {"pairs": [{"doc": doc, "claim": claim}], "mode": "nli"}
        )
        return data["labels"][0]

    def token_count(self, text: str) -> int:
        data = self._post({"texts": [text], "mode": "token_count"})
        return int(data["token_counts"][0])

    def healthy(self) -> bool:
        try:
            resp = self.session.get(f"{self.endpoint}/healthz", timeout=10)
            return resp.status_code == 200 and resp.json().get("status") == "ready"
        except requests.RequestException:
            return False
