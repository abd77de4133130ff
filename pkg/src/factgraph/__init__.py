"""Context-graph tooling for grounded-factuality data generation and evaluation."""

__version__ = "0.1.0"

from .graphkit import (
    ContextGraph,
    SubGraph,
    Triple,
    build_graph,
    cluster_components,
    enumerate_subgraphs,
    is_acyclic,
    largest_component_hops,
    pick_edge,
)
from .synthesis import MhqaRecord, SampleRecord

__all__ = [
    "ContextGraph",
    "MhqaRecord",
    "SampleRecord",
    "SubGraph",
    "Triple",
    "build_graph",
    "cluster_components",
    "enumerate_subgraphs",
    "is_acyclic",
    "largest_component_hops",
    "pick_edge",
    "__version__",
]
