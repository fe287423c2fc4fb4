"""Distributed bipartite vertex cover algorithms on a CONGEST simulator."""

from .graph import (
    BipartiteGraph,
    Matching,
    SubgraphView,
    VertexCover,
    build_graph,
    generate,
    is_vertex_cover,
)
from .runtime import Msg, NodeContext, NodeProgram, RoundStats, run

__all__ = [
    "BipartiteGraph",
    "Matching",
    "SubgraphView",
    "VertexCover",
    "build_graph",
    "generate",
    "is_vertex_cover",
    "Msg",
    "NodeContext",
    "NodeProgram",
    "RoundStats",
    "run",
]
