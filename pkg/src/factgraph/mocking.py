"""Deterministic offline completion rules for the mock backend.

The scripted responder reads the "Your turn" sections back out of a
rendered prompt and answers with a completion computed from them, so the
whole pipeline runs offline and byte-reproducibly.  Fixture documents are
written in a rigid pattern the responder can parse: every factual sentence
is ``<Head Entity> <relation words> <Tail Entity>.`` where entity words
are capitalized and relation words are lowercase.

These rules exist for fixtures, demos, and tests; they are not a model.
"""

from __future__ import annotations

import re

from .errors import BackendError
from .gateway import CompletionRequest
from .promptgen import (
    DEFAULT_GROUP_DELIMITER,
    DEFAULT_TUPLE_DELIMITER,
    parse_triples_doc,
)
from .graphkit import Triple

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")

_FACT = re.compile(
    rf"^([A-Z][\w'-]*(?:\s+[A-Z][\w'-]*)*)\s+"
    rf"([a-z][\w'-]*(?:\s+[a-z][\w'-]*)*)\s+"
    rf"([A-Z][\w'-]*(?:\s+[A-Z][\w'-]*)*)\.$"
)


def _your_turn(prompt: str) -> str:
    """The live-input tail of a prompt, past the few-shot examples."""
    _, sep, rest = prompt.rpartition("Your turn:")
    return rest if sep else prompt


def _section(text: str, start_marker: str, end_marker: str) -> str:
    """Text between the first start marker and the next end marker."""
    start = text.find(start_marker)
    if start == -1:
        raise BackendError(f"marker {start_marker!r} not found in prompt")
    start += len(start_marker)
    if end_marker:
        end = text.find(end_marker, start)
        if end == -1:
            raise BackendError(f"marker {end_marker!r} not found in prompt")
        return text[start:end].strip()
    return text[start:].strip()


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT.split(text.strip()) if s.strip()]


def extract_pattern_facts(sentence: str) -> tuple[str, str, str] | None:
    """(head, relation words, tail) for a patterned sentence, else None."""
    m = _FACT.match(sentence.strip())
    if not m:
        return None
    return m.group(1), m.group(2), m.group(3)


class ScriptedResponder:
    """``(request) -> completion`` rules keyed on the request tag."""

    def __init__(
        self,
        tuple_delimiter: str = DEFAULT_TUPLE_DELIMITER,
        group_delimiter: str = DEFAULT_GROUP_DELIMITER,
    ):
        self.td = tuple_delimiter
        self.gd = group_delimiter

    def __call__(self, request: CompletionRequest) -> str:
        handler = getattr(self, f"_tag_{request.request_tag}", None)
        if handler is None:
            raise BackendError(
                f"scripted mock has no rule for tag {request.request_tag!r}"
            )
        return handler(request.prompt)

    # -- graph extraction ------------------------------------------------

    def _doc_facts(self, doc: str) -> list[tuple[str, str, str]]:
        facts = []
        for sentence in split_sentences(doc):
            fact = extract_pattern_facts(sentence)
            if fact is not None:
                facts.append(fact)
        return facts

    def _tag_cg_doc(self, prompt: str) -> str:
        tail_text = _your_turn(prompt)
        doc = _section(tail_text, "Provided Sentences:\n", "\n\nGroups of Triples")
        lines = []
        for head, rel, tail in self._doc_facts(doc):
            description = f"{head} {rel} {tail}"
            lines.append(f"{head} {self.td} {tail} {self.td} {description}")
        return "\n".join(lines) if lines else "no triples found"

    def _tag_cg_mhqa(self, prompt: str) -> str:
        tail_text = _your_turn(prompt)
        block = _section(tail_text, "Provided Sentences:\n", "\n\nTriples in Provided")
        text = "\n".join(re.sub(r"^\s*-\s+", "", ln) for ln in block.splitlines())
        lines = []
        for head, rel, tail in self._doc_facts(text):
            lines.append(f"({head}, {rel}, {tail})")
        return "\n".join(lines) if lines else "no triples found"

    # -- claim handling ---------------------------------------------------

    def _tag_subgraph_map(self, prompt: str) -> str:
        tail = _your_turn(prompt)
        triples_block = _section(tail, "Provided Triples:\n", "\n\nProvided Sentences:")
        claim = _section(tail, "Provided Sentences:\n", "\n\nExisted Triplets")
        try:
            parsed = parse_triples_doc(triples_block, self.td, self.gd)
        except Exception:
            return "no triples found"
        claim_cf = claim.casefold()
        kept = [
            t
            for t in parsed.triples
            if t.head.casefold() in claim_cf and t.tail.casefold() in claim_cf
        ]
        if not kept:
            return "no matching triples"
        return "\n".join(
            f"({t.head} {self.td} {t.tail} {self.td} {t.relation})" for t in kept
        )

    def _tag_qa_to_claim(self, prompt: str) -> str:
        question = _section(prompt, "Question: ", "\n\nAnswer:")
        answer = _section(prompt, "Answer: ", "\n\nConvert the question")
        body = question.strip().rstrip("?").strip()
        return f"Single declarative sentence: {answer} is the answer to: {body}."

    def _tag_relation_removal(self, prompt: str) -> str:
        tail = _your_turn(prompt)
        entities = _section(tail, "Provided Entities:\n", "\n\nProvided Sentences:")
        doc = _section(
            tail, "Provided Sentences:\n", "\n\nRewrite Sentences with Relationship"
        )
        parts = [e.strip().casefold() for e in entities.split(",")]
        if len(parts) != 2:
            return doc
        head, tail = parts
        kept = [
            s
            for s in split_sentences(doc)
            if not (head in s.casefold() and tail in s.casefold())
        ]
        return " ".join(kept) if kept else "All content removed."

    def _tag_claim_from_graph(self, prompt: str) -> str:
        entities = _section(
            prompt, "must include the following entities: ", "\n\nProvided Article:"
        )
        names = [e.strip() for e in entities.split(",") if e.strip()]
        if len(names) == 1:
            return f"The article links {names[0]}."
        return "The article links " + ", ".join(names[:-1]) + f" and {names[-1]}."


def pattern_triples(doc: str) -> list[Triple]:
    """Triples a patterned fixture document encodes, for test oracles."""
    out = []
    for sentence in split_sentences(doc):
        fact = extract_pattern_facts(sentence)
        if fact is not None:
            head, rel, tail = fact
            out.append(Triple(head=head, tail=tail, relation=f"{head} {rel} {tail}"))
    return out
