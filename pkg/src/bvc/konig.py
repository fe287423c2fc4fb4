"""Layered vertex cover construction.

From a matching with no augmenting path shorter than 2k+1, the alternating
BFS levels partition each side into classes; unions of class prefixes and
suffixes give k candidate covers whose smallest member is within (1 + 1/k)
of the matching size. Running the same construction on a maximum matching
with unbounded depth yields an exact minimum vertex cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParam, ShortAugPathWitness
from .graph import (
    SIDE_A,
    SIDE_B,
    BipartiteGraph,
    Matching,
    SubgraphView,
    VertexCover,
    is_vertex_cover,
)
from .matching import eliminate_short_aug_paths
from .primitives import (
    AlternatingLayering,
    BfsForest,
    alternating_bfs,
    elect_leader_and_bfs,
    pipelined_aggregate,
    witness_check,
)
from .runtime import RoundStats, derive_seed, id_bits

INF = math.inf


@dataclass
class LayerPartition:
    """Class indices per side: A-nodes in {0, 1, ..., k, inf}, B-nodes in
    {1, ..., k, inf}. Class 0 holds the free in-view A-nodes; class i >= 1
    holds nodes first reached at alternating level 2i (A side) or 2i - 1
    (B side); unreached nodes are inf."""

    a_class: dict[int, int | float]
    b_class: dict[int, int | float]
    k: int

    @classmethod
    def from_layering(
        cls, view: SubgraphView, layering: AlternatingLayering, k: int
    ) -> "LayerPartition":
        base = view.base
        a_class: dict[int, int | float] = {}
        b_class: dict[int, int | float] = {}
        for v in view.in_nodes:
            lv = layering.level.get(v)
            if base.side[v] == SIDE_A:
                a_class[v] = INF if lv is None else lv // 2
            else:
                b_class[v] = INF if lv is None else (lv + 1) // 2
        return cls(a_class, b_class, k)

    def size_of_b_class(self, i: int) -> int:
        return sum(1 for c in self.b_class.values() if c == i)

    def sizes(self) -> list[int]:
        return [self.size_of_b_class(i) for i in range(1, self.k + 1)]


@dataclass
class CandidateCoverFamily:
    partition: LayerPartition
    sizes: list[int]
    i_star: int

    @classmethod
    def from_partition(cls, partition: LayerPartition) -> "CandidateCoverFamily":
        sizes = partition.sizes()
        i_star = min(range(1, partition.k + 1), key=lambda i: (sizes[i - 1], i))
        return cls(partition, sizes, i_star)


def _witness_or_none(view: SubgraphView, matching: Matching, layering, limit: int):
    """Smallest odd level < limit at which a free in-view B-node appears."""
    base = view.base
    best = None
    for v, lv in layering.level.items():
        if (
            lv % 2 == 1
            and lv < limit
            and base.side[v] == SIDE_B
            and not matching.is_matched(v)
            and view.contains_node(v)
        ):
            if best is None or lv < best:
                best = lv
    return best


def compute_partition(
    graph: BipartiteGraph,
    view: SubgraphView,
    matching: Matching,
    k: int,
    *,
    seed: int = 0,
    bandwidth: int | None = None,
) -> tuple[LayerPartition, RoundStats]:
    """Distributed layering to depth 2k, classified per node.

    Raises ShortAugPathWitness if a free B-node shows up at an odd level
    <= 2k - 1, which certifies an augmenting path the caller assumed away.
    """
    if k < 1:
        raise InvalidParam("k must be >= 1")
    layering, stats = alternating_bfs(
        graph, view, matching, 2 * k, seed=seed, bandwidth=bandwidth, phase="partition"
    )
    witness = _witness_or_none(view, matching, layering, 2 * k)
    if witness is not None:
        raise ShortAugPathWitness(f"free B-node at level {witness} <= {2 * k - 1}")
    return LayerPartition.from_layering(view, layering, k), stats


def candidate_cover(view: SubgraphView, partition: LayerPartition, s: int) -> VertexCover:
    """The s-th candidate: A-classes s..k and inf, plus B-classes 1..s."""
    if not 1 <= s <= partition.k:
        raise InvalidParam(f"s={s} outside 1..{partition.k}")
    nodes = [v for v, c in partition.a_class.items() if c == INF or s <= c <= partition.k]
    nodes += [v for v, c in partition.b_class.items() if c != INF and c <= s]
    cover = VertexCover(nodes, view)
    if not cover.is_valid():
        raise AssertionError("candidate cover failed validation")
    return cover


def koenig_approx_cover(
    graph: BipartiteGraph,
    view: SubgraphView,
    matching: Matching,
    k: int,
    *,
    seed: int = 0,
    bandwidth: int | None = None,
    forest: BfsForest | None = None,
) -> tuple[VertexCover, RoundStats]:
    """Cover of size at most (1 + 1/k) times the matching size, given a
    matching with no augmenting path of length <= 2k - 1.

    Phases: leader/BFS/bipartition, the 2k-level partition, pipelined
    aggregation of the k B-class sizes, and local selection against the
    componentwise argmin index (ties to the smallest index).
    """
    stats = RoundStats()
    if forest is None:
        forest, elect_stats = elect_leader_and_bfs(
            graph, view, seed=derive_seed(seed, 101), bandwidth=bandwidth
        )
        stats.add_sequential(elect_stats)
    partition, part_stats = compute_partition(
        graph, view, matching, k, seed=derive_seed(seed, 102), bandwidth=bandwidth
    )
    stats.add_sequential(part_stats)

    values = {}
    for v in graph.node_ids:
        row = [0] * k
        c = partition.b_class.get(v)
        if c is not None and c != INF and 1 <= c <= k:
            row[int(c) - 1] = 1
        values[v] = tuple(row)
    sums, agg_stats = pipelined_aggregate(
        graph,
        forest,
        values,
        combine="sum",
        value_width=id_bits(graph.n) + 1,
        seed=derive_seed(seed, 103),
        bandwidth=bandwidth,
        view=view,
        phase="class-sizes",
    )
    stats.add_sequential(agg_stats)

    # Selection is local once every node knows its component's class sizes.
    nodes = []
    for v in view.in_nodes:
        comp_sizes = sums[v]
        i_star = min(range(1, k + 1), key=lambda i: (comp_sizes[i - 1], i))
        side = graph.side[v]
        if side == SIDE_A:
            c = partition.a_class.get(v)
            if c == INF or (c is not None and i_star <= c <= k):
                nodes.append(v)
        else:
            c = partition.b_class.get(v)
            if c is not None and c != INF and c <= i_star:
                nodes.append(v)
    cover = VertexCover(nodes, view)
    if not cover.is_valid():
        raise AssertionError("layered cover failed validation")
    return cover, stats


def koenig_exact_cover(
    graph: BipartiteGraph,
    view: SubgraphView,
    *,
    seed: int = 0,
    bandwidth: int | None = None,
) -> tuple[VertexCover, RoundStats]:
    """Exact minimum vertex cover: eliminate augmenting paths with doubling
    depth until none remain, then keep the A-nodes missed by the final
    alternating reachability and the B-nodes it reaches."""
    stats = RoundStats()
    forest, elect_stats = elect_leader_and_bfs(
        graph, view, seed=derive_seed(seed, 201), bandwidth=bandwidth
    )
    stats.add_sequential(elect_stats)

    matching = Matching([], view)
    k = 1
    d_start = 1
    layering = None
    for attempt in range(2 * graph.n + 2):
        shortest, layering, check_stats = witness_check(
            graph, view, matching, forest, seed=derive_seed(seed, 300 + attempt), bandwidth=bandwidth
        )
        stats.add_sequential(check_stats)
        if shortest is None:
            break
        while 2 * k - 1 < shortest:
            k *= 2
        matching, elim_stats = eliminate_short_aug_paths(
            graph,
            view,
            matching,
            k,
            seed=derive_seed(seed, 400 + attempt),
            bandwidth=bandwidth,
            d_start=d_start,
        )
        stats.add_sequential(elim_stats)
        d_start = 2 * k + 1
        k *= 2

    base = view.base
    nodes = [
        v
        for v in view.in_nodes
        if (base.side[v] == SIDE_A) == (v not in layering.level)
    ]
    cover = VertexCover(nodes, view)
    if not cover.is_valid() or cover.size != matching.size:
        raise AssertionError("exact cover construction failed its size identity")
    return cover, stats
