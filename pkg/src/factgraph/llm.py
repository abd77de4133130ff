"""Template-aware completion client shared by the pipelines.

Binds a gateway, a template library, model parameters, and the configured
triple delimiters.  Also hosts the graph-extraction helpers with the
one-retry policy for ill-formatted completions: a completion that parses
to zero triples is requested once more bypassing the cache, then the
record is dropped by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AllRejected
from .gateway import CompletionRequest, Gateway
from .graphkit import ContextGraph, build_graph
from .promptgen import (
    DEFAULT_GROUP_DELIMITER,
    DEFAULT_TUPLE_DELIMITER,
    ParsedTriples,
    TemplateLibrary,
    parse_triples_doc,
    parse_triples_mhqa,
)


@dataclass
class LlmClient:
    gateway: Gateway
    templates: TemplateLibrary
    model: str = "offline"
    temperature: float = 0.0
    max_tokens: int = 2048
    tuple_delimiter: str = DEFAULT_TUPLE_DELIMITER
    group_delimiter: str = DEFAULT_GROUP_DELIMITER

    def render(self, template_id: str, slots: dict[str, str]) -> str:
        merged = dict(slots)
        merged.setdefault("TUPLE_DELIMITER", self.tuple_delimiter)
        merged.setdefault("GROUP_DELIMITER", self.group_delimiter)
        return self.templates.render(template_id, merged)

    def complete(
        self, template_id: str, slots: dict[str, str], force_refresh: bool = False
    ) -> str:
        prompt = self.render(template_id, slots)
        request = CompletionRequest(
            model=self.model,
            prompt=prompt,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            request_tag=template_id,
        )
        return self.gateway.complete(request, force_refresh=force_refresh).text

    def _complete_triples(
        self, template_id: str, slots: dict[str, str], parser
    ) -> ParsedTriples:
        text = self.complete(template_id, slots)
        try:
            return parser(text)
        except AllRejected:
            retry_text = self.complete(template_id, slots, force_refresh=True)
            return parser(retry_text)

    def extract_doc_graph(self, doc_text: str, doc_id: str) -> ContextGraph:
        """Document -> context graph via the grouped-triples prompt."""
        parsed = self._complete_triples(
            "cg_doc",
            {"SENTENCES": doc_text},
            lambda text: parse_triples_doc(
                text, self.tuple_delimiter, self.group_delimiter
            ),
        )
        return build_graph(parsed.triples, doc_id)

    def extract_sentence_graph(
        self, sentences: list[str], doc_id: str
    ) -> ContextGraph:
        """Supporting sentences -> context graph via the bulleted prompt."""
        block = "\n".join(f"- {s}" for s in sentences)
        parsed = self._complete_triples(
            "cg_mhqa", {"SENTENCES": block}, parse_triples_mhqa
        )
        return build_graph(parsed.triples, doc_id)
