"""Prompt template rendering and completion parsing.

Templates are UTF-8 text files with ``{{SLOT}}`` placeholders, shipped under
``factgraph/prompts/`` and overridable with any directory of ``<id>.txt``
files.  Parsers are total: every non-blank line of a completion either
yields a triple or lands in ``rejected_lines``; nothing is silently
dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import AllRejected, EmptyCompletion, MissingSlot, UnknownTemplate
from .graphkit import Triple

TEMPLATE_IDS = (
    "cg_mhqa",
    "cg_doc",
    "subgraph_map",
    "qa_to_claim",
    "relation_removal",
    "claim_from_graph",
)

# Slots each template may reference; the loader checks the body against this.
TEMPLATE_SLOTS = {
    "cg_mhqa": {"SENTENCES"},
    "cg_doc": {"SENTENCES", "TUPLE_DELIMITER", "GROUP_DELIMITER"},
    "subgraph_map": {"TRIPLES", "SENTENCES", "TUPLE_DELIMITER"},
    "qa_to_claim": {"QUESTION", "ANSWER"},
    "relation_removal": {"ENTITIES", "SENTENCES"},
    "claim_from_graph": {"ENTITIES", "SENTENCES"},
}

DEFAULT_TUPLE_DELIMITER = "<|>"
DEFAULT_GROUP_DELIMITER = "##"

_SLOT_RE = re.compile(r"\{\{([A-Z_]+)\}\}")
_BULLET_RE = re.compile(r"^\s*(?:[-*•]\s+)?")

# Header lines a model may echo back before its actual answer.
_ECHO_HEADERS = (
    "Single declarative sentence:",
    "Your Claim:",
    "Rewrite Sentences with Relationship Between Provided Two Entites Removed:",
    "Rewrite Sentences with relationship between provided two entites removed:",
    "Rewrite Sentences:",
    "Existed Triplets in Provided Sentences:",
    "Triples in Provided Sentences:",
    "Groups of Triples in Provided Sentences:",
)


class TemplateLibrary:
    """Loads and renders the prompt templates from a directory."""

    def __init__(self, prompts_dir: Optional[str | Path] = None):
        self._dir = Path(prompts_dir) if prompts_dir else None
        self._cache: dict[str, str] = {}

    def body(self, template_id: str) -> str:
        if template_id not in TEMPLATE_IDS:
            raise UnknownTemplate(f"no template named {template_id!r}")
        if template_id not in self._cache:
            if self._dir is not None:
                path = self._dir / f"{template_id}.txt"
                if not path.is_file():
                    raise UnknownTemplate(f"template file missing: {path}")
                text = path.read_text(encoding="utf-8")
            else:
                text = (
                    resources.files("factgraph")
                    .joinpath("prompts", f"{template_id}.txt")
                    .read_text(encoding="utf-8")
                )
            referenced = set(_SLOT_RE.findall(text))
            undeclared = referenced - TEMPLATE_SLOTS[template_id]
            if undeclared:
                raise UnknownTemplate(
                    f"template {template_id!r} references undeclared slots {sorted(undeclared)}"
                )
            self._cache[template_id] = text
        return self._cache[template_id]

    def render(self, template_id: str, slots: dict[str, str]) -> str:
        """Byte-exact substitution of slot values into the template body."""
        body = self.body(template_id)
        referenced = set(_SLOT_RE.findall(body))
        missing = [
            name
            for name in sorted(referenced)
            if name not in slots or not str(slots[name])
        ]
        if missing:
            raise MissingSlot(
                f"template {template_id!r} needs non-empty slots {missing}"
            )
        return _SLOT_RE.sub(lambda m: str(slots[m.group(1)]), body)


_DEFAULT_LIBRARY = TemplateLibrary()


def render(template_id: str, slots: dict[str, str]) -> str:
    """Render a packaged template (module-level convenience)."""
    return _DEFAULT_LIBRARY.render(template_id, slots)


@dataclass
class ParsedTriples:
    """Parse result: triple groups plus every line that failed to parse."""

    groups: list[list[Triple]] = field(default_factory=list)
    rejected_lines: list[str] = field(default_factory=list)

    @property
    def triples(self) -> list[Triple]:
        return [t for group in self.groups for t in group]


def _strip_bullet(line: str) -> str:
    return _BULLET_RE.sub("", line, count=1).strip()


def _strip_parens(text: str) -> str:
    if text.startswith("(") and text.endswith(")"):
        return text[1:-1].strip()
    return text


def parse_triples_mhqa(text: str) -> ParsedTriples:
    """Parse ``(head, relation, tail)`` lines into a single triple group.

    Splits on the first and the last comma, so the relation may itself
    contain commas; the endpoints may not.  Lines that do not fit go to
    ``rejected_lines``.  Raises :class:`AllRejected` (carrying the partial
    result) when nothing parsed.
    """
    result = ParsedTriples(groups=[[]])
    for raw in text.splitlines():
        if not raw.strip():
            continue
        content = _strip_bullet(raw)
        if not (content.startswith("(") and content.endswith(")")):
            result.rejected_lines.append(raw)
            continue
        inner = _strip_parens(content)
        first = inner.find(",")
        last = inner.rfind(",")
        if first == -1 or first == last:
            result.rejected_lines.append(raw)
            continue
        head = inner[:first].strip()
        relation = inner[first + 1 : last].strip()
        tail = inner[last + 1 :].strip()
        try:
            triple = Triple(head=head, tail=tail, relation=relation)
        except ValueError:
            result.rejected_lines.append(raw)
            continue
        result.groups[0].append(triple)
    if not result.groups[0]:
        result.groups = []
        raise AllRejected("no triples parsed from completion", parsed=result)
    return result


def parse_triples_doc(
    text: str,
    tuple_delimiter: str = DEFAULT_TUPLE_DELIMITER,
    group_delimiter: str = DEFAULT_GROUP_DELIMITER,
) -> ParsedTriples:
    """Parse ``head {td} tail {td} relation`` lines, grouped by ``{gd}`` lines.

    Lines may be bulleted and may be wrapped in parentheses (the sub-graph
    mapping output uses the parenthesized form).  Raises
    :class:`AllRejected` when nothing parsed.
    """
    if not tuple_delimiter or not group_delimiter:
        raise ValueError("delimiters must be non-empty")
    if tuple_delimiter == group_delimiter:
        raise ValueError("delimiters must be distinct")
    result = ParsedTriples()
    current: list[Triple] = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        content = _strip_bullet(raw)
        if content == group_delimiter:
            if current:
                result.groups.append(current)
                current = []
            continue
        fields = _strip_parens(content).split(tuple_delimiter)
        if len(fields) != 3:
            result.rejected_lines.append(raw)
            continue
        head, tail, relation = (f.strip() for f in fields)
        try:
            triple = Triple(head=head, tail=tail, relation=relation)
        except ValueError:
            result.rejected_lines.append(raw)
            continue
        current.append(triple)
    if current:
        result.groups.append(current)
    if not result.triples:
        raise AllRejected("no triples parsed from completion", parsed=result)
    return result


def format_triples_doc(
    group: list[Triple], tuple_delimiter: str = DEFAULT_TUPLE_DELIMITER
) -> str:
    """Serialize one group back into the tuple-delimiter line format.

    Round-trips through :func:`parse_triples_doc` provided no field
    contains the delimiter or a newline.
    """
    return "\n".join(
        f"{t.head} {tuple_delimiter} {t.tail} {tuple_delimiter} {t.relation}"
        for t in group
    )


def format_triples_mhqa(group: list[Triple]) -> str:
    """Serialize one group into ``(head, relation, tail)`` lines.

    Round-trips through :func:`parse_triples_mhqa` provided the endpoints
    are comma-free.
    """
    return "\n".join(f"({t.head}, {t.relation}, {t.tail})" for t in group)


def parse_single_text(text: str) -> str:
    """Strip whitespace and an echoed header from a single-text completion."""
    stripped = text.strip()
    for header in _ECHO_HEADERS:
        if stripped.lower().startswith(header.lower()):
            stripped = stripped[len(header) :].strip()
            break
    if not stripped:
        raise EmptyCompletion("completion empty after stripping")
    return stripped
