"""Sentence segmentation and budgeted document chunking.

Long documents are scored chunk by chunk: the document is split at
sentence boundaries, sentences are packed greedily left to right into
chunks whose token total stays within the budget, and the pair's final
confidence is the maximum over per-chunk scores.
"""

from __future__ import annotations

import warnings
from typing import Callable

from ..errors import EmptyDocument, ScoringFailed
from .scorers import Scorer, whitespace_tokens

_TERMINALS = ".!?"
_CLOSERS = "\"')]}”’"

# Tokens that end with a period without ending a sentence.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
    "e.g", "i.e", "no", "fig", "al", "inc", "ltd", "co", "corp",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
    "oct", "nov", "dec", "u.s", "u.k", "approx",
}


def _is_abbreviation(word: str) -> bool:
    bare = word.rstrip(".").casefold()
    if bare in _ABBREVIATIONS:
        return True
    # Single-letter initials such as "J." in "J. Smith".
    return len(bare) == 1 and bare.isalpha()


def split_sentences(text: str) -> list[str]:
    """Rule-based sentence splitting shared by the chunker and CoRe builder.

    A boundary is a terminal punctuation mark, followed by optional closing
    quotes or brackets, followed by whitespace and a non-lowercase
    character.  Abbreviations, initials, and decimal points do not split.
    """
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _TERMINALS:
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            if j >= n:
                i = j
                continue
            if not text[j].isspace():
                i += 1
                continue
            k = j
            while k < n and text[k].isspace():
                k += 1
            if k < n and text[k].islower():
                i = j
                continue
            if ch == ".":
                word = text[start:i].split()[-1] if text[start:i].split() else ""
                if _is_abbreviation(word + "."):
                    i = j
                    continue
                # Decimal point: digit on both sides.
                if i > 0 and text[i - 1].isdigit() and j < n and i + 1 < n and text[i + 1].isdigit():
                    i += 1
                    continue
            sentence = text[start:j].strip()
            if sentence:
                sentences.append(" ".join(sentence.split()))
            start = k
            i = k
        else:
            i += 1
    trailing = text[start:].strip()
    if trailing:
        sentences.append(" ".join(trailing.split()))
    return sentences


def chunk_document(
    doc: str, budget_tokens: int, token_counter: Callable[[str], int]
) -> list[str]:
    """Greedy left-to-right packing of sentences into budgeted chunks.

    A chunk accepts sentences while its token total stays within the
    budget; a single sentence that alone exceeds the budget becomes its
    own (oversize) chunk.  Joining the chunks with single spaces
    reproduces the sentence sequence.
    """
    if budget_tokens < 1:
        raise ValueError("budget_tokens must be >= 1")
    sentences = split_sentences(doc)
    if not sentences:
        raise EmptyDocument("document has no sentences")
    chunks: list[list[str]] = []
    current: list[str] = []
    current_tokens = 0
    for sentence in sentences:
        tokens = token_counter(sentence)
        if current and current_tokens + tokens > budget_tokens:
            chunks.append(current)
            current = []
            current_tokens = 0
        current.append(sentence)
        current_tokens += tokens
    if current:
        chunks.append(current)
    return [" ".join(chunk) for chunk in chunks]


def resolve_token_counter(scorer: Scorer) -> Callable[[str], int]:
    """The scorer's own tokenizer when available, whitespace otherwise."""
    counter = getattr(scorer, "token_count", None)
    if callable(counter):
        return counter
    warnings.warn(
        "scorer exposes no token_count; falling back to whitespace tokens",
        stacklevel=2,
    )
    return whitespace_tokens


def score_pair(scorer: Scorer, doc: str, claim: str, budget: int) -> float:
    """Max-over-chunks confidence for one (doc, claim) pair."""
    counter = resolve_token_counter(scorer)
    chunks = chunk_document(doc, budget, counter)
    scores: list[float] = []
    for chunk in chunks:
        try:
            value = float(scorer.score(chunk, claim))
        except Exception as exc:
            raise ScoringFailed(f"scorer failed on a chunk: {exc}") from exc
        if not 0.0 <= value <= 1.0:
            raise ScoringFailed(f"scorer returned {value!r} outside [0, 1]")
        scores.append(value)
    return max(scores)
