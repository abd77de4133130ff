"""Undirected context-graph structures and sub-graph machinery.

A context graph holds entity--entity edges where each edge carries a short
free-text description of how the two entities are connected.  Edges are
non-directional.  On top of the graph type this module provides connected
component clustering, cycle filtering, exhaustive sub-graph enumeration by
hop count and shape, hop counting, and seeded edge picking.

Everything here is pure: no hidden state, no randomness outside explicit
seeds, safe to call from multiple workers.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import ContractViolation, CyclicGraph, EmptyGraph

_WS_RUN = re.compile(r"\s+")

PATH = "path"
BRANCHED = "branched"
SHAPES = (PATH, BRANCHED)


def normalize_text(text: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return _WS_RUN.sub(" ", text).strip()


def entity_key(entity: str) -> str:
    """Case-insensitive identity key for an entity surface form."""
    return normalize_text(entity).casefold()


@dataclass(frozen=True)
class Triple:
    """One undirected edge: two entities plus a relation description.

    Surface forms keep their original casing (whitespace is collapsed);
    identity is case-insensitive over the unordered endpoint pair plus the
    relation text.  ``source_span`` is provenance metadata and does not
    participate in equality.
    """

    head: str
    tail: str
    relation: str
    source_span: Optional[tuple[int, int]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "head", normalize_text(self.head))
        object.__setattr__(self, "tail", normalize_text(self.tail))
        object.__setattr__(self, "relation", normalize_text(self.relation))
        if not self.head or not self.tail:
            raise ValueError("triple endpoints must be non-empty")
        if not self.relation:
            raise ValueError("triple relation must be non-empty")
        if entity_key(self.head) == entity_key(self.tail):
            raise ValueError(f"self-loop rejected: {self.head!r}")

    @property
    def head_key(self) -> str:
        return entity_key(self.head)

    @property
    def tail_key(self) -> str:
        return entity_key(self.tail)

    def key(self) -> tuple[tuple[str, str], str]:
        """Undirected identity: (sorted endpoint keys, relation)."""
        pair = tuple(sorted((self.head_key, self.tail_key)))
        return (pair, self.relation)

    def __eq__(self, other):
        if not isinstance(other, Triple):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def to_dict(self) -> dict:
        return {"head": self.head, "tail": self.tail, "relation": self.relation}

    @classmethod
    def from_dict(cls, data: dict) -> "Triple":
        return cls(head=data["head"], tail=data["tail"], relation=data["relation"])


def _canonical_edges(triples: Iterable[Triple]) -> list[Triple]:
    """Deduplicate on edge key and sort; independent of input order."""
    ordered = sorted(triples, key=lambda t: (t.key(), t.head, t.tail, t.relation))
    out: list[Triple] = []
    seen = set()
    for t in ordered:
        k = t.key()
        if k not in seen:
            seen.add(k)
            out.append(t)
    return out


@dataclass(frozen=True)
class ContextGraph:
    """Undirected multigraph of a document, collapsed on (pair, relation)."""

    doc_id: str
    edges: tuple[Triple, ...]
    nodes: tuple[str, ...]  # display forms, sorted by key

    @classmethod
    def from_triples(cls, triples: Iterable[Triple], doc_id: str) -> "ContextGraph":
        edges = _canonical_edges(triples)
        if not edges:
            raise EmptyGraph(f"no triples for document {doc_id!r}")
        display: dict[str, str] = {}
        for t in edges:
            display.setdefault(t.head_key, t.head)
            display.setdefault(t.tail_key, t.tail)
        nodes = tuple(display[k] for k in sorted(display))
        return cls(doc_id=doc_id, edges=tuple(edges), nodes=nodes)

    @property
    def node_keys(self) -> frozenset[str]:
        return frozenset(entity_key(n) for n in self.nodes)

    def edge_keys(self) -> frozenset:
        return frozenset(t.key() for t in self.edges)

    def degree(self) -> dict[str, int]:
        deg: dict[str, int] = {}
        for t in self.edges:
            deg[t.head_key] = deg.get(t.head_key, 0) + 1
            deg[t.tail_key] = deg.get(t.tail_key, 0) + 1
        return deg

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "nodes": list(self.nodes),
            "edges": [t.to_dict() for t in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ContextGraph":
        triples = [Triple.from_dict(e) for e in data["edges"]]
        return cls.from_triples(triples, doc_id=data["doc_id"])


def build_graph(triples: Sequence[Triple], doc_id: str) -> ContextGraph:
    """Collapse duplicate edges and assemble a graph for one document."""
    return ContextGraph.from_triples(triples, doc_id)


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _component_edge_groups(edges: Sequence[Triple]) -> list[list[Triple]]:
    """Group edges by connected component; deterministic order."""
    uf = _UnionFind()
    for t in edges:
        uf.union(t.head_key, t.tail_key)
    groups: dict[str, list[Triple]] = {}
    for t in edges:
        groups.setdefault(uf.find(t.head_key), []).append(t)
    return sorted(groups.values(), key=lambda g: min(t.key() for t in g))


def cluster_components(graph: ContextGraph) -> list[ContextGraph]:
    """Partition a graph's edges into connected components."""
    return [
        ContextGraph.from_triples(group, graph.doc_id)
        for group in _component_edge_groups(graph.edges)
    ]


def is_acyclic(component: ContextGraph) -> bool:
    """True iff a connected component is a tree (edges == nodes - 1)."""
    if len(_component_edge_groups(component.edges)) != 1:
        raise ContractViolation(
            f"is_acyclic requires a connected component ({component.doc_id!r})"
        )
    return len(component.edges) == len(component.nodes) - 1


def largest_component_hops(sub: Iterable[Triple]) -> int:
    """Edge count of the connected component with the most edges."""
    edges = _canonical_edges(sub)
    if not edges:
        raise EmptyGraph("hop counting needs at least one triple")
    return max(len(g) for g in _component_edge_groups(edges))


@dataclass(frozen=True)
class SubGraph:
    """A connected, acyclic edge subset of a parent graph.

    ``hops`` is the edge count of the largest connected component, which
    equals the total edge count because enumerated sub-graphs are connected.
    """

    parent_doc_id: str
    edges: tuple[Triple, ...]
    shape: str
    hops: int

    def __post_init__(self):
        if not self.edges:
            raise EmptyGraph("sub-graph must have at least one edge")
        if self.shape not in SHAPES:
            raise ContractViolation(f"unknown shape {self.shape!r}")
        object.__setattr__(
            self, "edges", tuple(_canonical_edges(self.edges))
        )
        if self.hops != largest_component_hops(self.edges):
            raise ContractViolation("hops must equal largest component edge count")
        deg = _degrees(self.edges)
        connected = len(_component_edge_groups(self.edges)) == 1
        acyclic = connected and len(self.edges) == len(deg) - 1
        if self.shape == PATH:
            if not (connected and acyclic and max(deg.values()) <= 2):
                raise ContractViolation("path shape requires a simple path")
        else:
            if not (connected and acyclic and max(deg.values()) >= 3):
                raise ContractViolation("branched shape requires a degree-3 node")

    def node_displays(self) -> list[str]:
        display: dict[str, str] = {}
        for t in self.edges:
            display.setdefault(t.head_key, t.head)
            display.setdefault(t.tail_key, t.tail)
        return [display[k] for k in sorted(display)]

    def sort_key(self):
        return tuple(sorted(t.key() for t in self.edges))


def _degrees(edges: Sequence[Triple]) -> dict[str, int]:
    deg: dict[str, int] = {}
    for t in edges:
        deg[t.head_key] = deg.get(t.head_key, 0) + 1
        deg[t.tail_key] = deg.get(t.tail_key, 0) + 1
    return deg


def _subset_shape(edges: Sequence[Triple]) -> Optional[str]:
    """Shape of a connected acyclic edge set, or None if neither shape fits."""
    deg = _degrees(edges)
    top = max(deg.values())
    if top <= 2:
        return PATH
    return BRANCHED


def _connected_edge_subsets(edges: Sequence[Triple], size: int) -> list[frozenset[int]]:
    """All connected edge subsets of exactly ``size`` edges.

    Each subset is enumerated once, anchored at its minimum edge index and
    grown only with higher-indexed adjacent edges.
    """
    adjacency: dict[str, set[int]] = {}
    for i, t in enumerate(edges):
        adjacency.setdefault(t.head_key, set()).add(i)
        adjacency.setdefault(t.tail_key, set()).add(i)

    results: list[frozenset[int]] = []
    for anchor in range(len(edges)):
        frontier = {frozenset([anchor])}
        seen = set(frontier)
        for _ in range(size - 1):
            grown = set()
            for subset in frontier:
                candidates: set[int] = set()
                for i in subset:
                    t = edges[i]
                    candidates |= adjacency[t.head_key] | adjacency[t.tail_key]
                for j in candidates:
                    if j <= anchor or j in subset:
                        continue
                    nxt = subset | {j}
                    if nxt not in seen:
                        seen.add(nxt)
                        grown.add(nxt)
            frontier = grown
            if not frontier:
                break
        if size == 1:
            results.append(frozenset([anchor]))
        else:
            results.extend(frontier)
    return results


def enumerate_subgraphs(graph: ContextGraph, hops: int, shape: str) -> list[SubGraph]:
    """All sub-graphs of exactly ``hops`` edges with the requested shape.

    The input graph must be acyclic (a forest is fine); cyclic components
    must have been filtered out first.  Output order is lexicographic over
    sorted edge keys, so it is stable across runs.
    """
    if hops < 1:
        raise ContractViolation("hops must be >= 1")
    if shape not in SHAPES:
        raise ContractViolation(f"unknown shape {shape!r}")
    for group in _component_edge_groups(graph.edges):
        node_count = len(_degrees(group))
        if len(group) != node_count - 1:
            raise CyclicGraph(f"graph {graph.doc_id!r} has a cyclic component")

    edges = list(graph.edges)
    found: list[SubGraph] = []
    for subset in _connected_edge_subsets(edges, hops):
        chosen = [edges[i] for i in subset]
        if _subset_shape(chosen) == shape:
            found.append(
                SubGraph(
                    parent_doc_id=graph.doc_id,
                    edges=tuple(chosen),
                    shape=shape,
                    hops=hops,
                )
            )
    found.sort(key=SubGraph.sort_key)
    return found


def _stable_rng(seed: int, *parts: str) -> random.Random:
    """Platform-stable RNG derived from a seed plus string context."""
    material = "\x1f".join([str(seed), *parts]).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def pick_edge(sub: "SubGraph | Iterable[Triple]", seed: int) -> Triple:
    """Pick one edge, deterministic per (edge set, seed), uniform over seeds.

    Accepts a :class:`SubGraph` or any collection of triples (the claim
    sub-graphs mapped from QA data are arbitrary edge sets).
    """
    edges = sub.edges if isinstance(sub, SubGraph) else _canonical_edges(sub)
    if not edges:
        raise EmptyGraph("cannot pick an edge from an empty sub-graph")
    ordered = sorted(edges, key=lambda t: t.key())
    material = ";".join(f"{a}~{b}~{rel}" for (a, b), rel in (t.key() for t in ordered))
    rng = _stable_rng(seed, material)
    return ordered[rng.randrange(len(ordered))]


def sample_subgraphs(
    subgraphs: Sequence[SubGraph], cap: int, seed: int, context: str
) -> list[SubGraph]:
    """Seeded uniform sample of at most ``cap`` sub-graphs, order preserved."""
    if cap <= 0 or len(subgraphs) <= cap:
        return list(subgraphs)
    rng = _stable_rng(seed, context, str(len(subgraphs)))
    idx = sorted(rng.sample(range(len(subgraphs)), cap))
    return [subgraphs[i] for i in idx]
